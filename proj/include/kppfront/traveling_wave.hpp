#pragma once

#include "kppfront/kpp_core.hpp"

#include <iosfwd>
#include <memory>
#include <vector>

namespace kpp {

enum class TailNormalization { Critical, Supercritical };

/// Resolution of the tabulated profile.
struct WaveGrid {
    double dz = 0.01;
    double eps_tail = 1e-8;
    double seed = 1e-10;       ///< 1 - U at the first node (start on the unstable manifold of U = 1)
    double ode_tol = 1e-6;     ///< max |U'' + cU' + f(U)| at interior nodes
    double tail_ratio_tol = 0.02;
};

/// Monotone front U_c with U(-inf) = 1, U(+inf) = 0, translated so that
/// U(z) ~ z e^{-lambda* z} (critical) or U(z) ~ e^{-lambda z} (supercritical).
class WaveProfile {
public:
    WaveProfile(SpeedPair speed, TailNormalization norm, std::vector<double> z,
                std::vector<double> U, std::vector<double> dU, double tail_b, double eps_tail);

    const SpeedPair& speed() const { return speed_; }
    TailNormalization normalization() const { return norm_; }
    /// Subleading tail constant: U ~ (z + b) e^{-lambda* z}; zero for supercritical.
    double tail_b() const { return tail_b_; }
    double eps_tail() const { return eps_tail_; }

    const std::vector<double>& z() const { return z_; }
    const std::vector<double>& U() const { return U_; }
    const std::vector<double>& dU() const { return dU_; }
    double z_min() const { return z_.front(); }
    double z_max() const { return z_.back(); }

    /// Hermite interpolation inside the grid, plateau 1 to the left, tail formula to the right.
    double operator()(double z) const;
    double derivative(double z) const;

    /// Two columns (z, U) under a header naming c, lambda and the normalization.
    void export_text(std::ostream& os) const;

private:
    struct Interp;
    SpeedPair speed_;
    TailNormalization norm_;
    std::vector<double> z_, U_, dU_;
    double tail_b_;
    double eps_tail_;
    std::shared_ptr<const Interp> interp_;
};

/// Integrates U'' + cU' + f(U) = 0 from the unstable manifold of U = 1 down the tail
/// and fixes the translation from a fit of the tail. Throws DomainError for c < c*
/// and ShootingError if the trajectory leaves (0,1) or the post-checks fail.
WaveProfile solve_profile(const KppNonlinearity& f, double c, const WaveGrid& grid = {});

/// z with U(z) = m; RangeError when m is outside (eps_tail, 1 - eps_tail).
double profile_inverse(const WaveProfile& W, double m);

/// max |U'' + cU' + f(U)| over interior nodes with fourth-order differences.
double profile_ode_residual(const WaveProfile& W, const KppNonlinearity& f);

}  // namespace kpp
