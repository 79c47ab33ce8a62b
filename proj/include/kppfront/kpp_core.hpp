#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace kpp {

/// Reaction term f of u_t = u_xx + f(u), restricted to the KPP class.
///
/// f is evaluated by the user callable on [0,1] and extended linearly outside:
/// f(s) = f'(0) s for s < 0 and f(s) = f'(1)(s - 1) for s > 1.
/// Construction samples the KPP inequalities and estimates c_g <= g(s)/s^2 <= C_g.
class KppNonlinearity {
public:
    using Fn = std::function<double(double)>;

    /// f'(1) is estimated by a one-sided difference when not given (NaN).
    KppNonlinearity(std::string name, Fn f01, double fprime0,
                    double fprime1 = std::numeric_limits<double>::quiet_NaN());

    static KppNonlinearity fisher(double rate = 1.0);

    /// Monotone cubic through (s_i, f_i) on [0,1]; s must start at 0 and end at 1.
    static KppNonlinearity tabulated(std::string name, std::vector<double> s,
                                     std::vector<double> f, double fprime0);

    double operator()(double s) const;

    double fprime0() const { return fprime0_; }
    double fprime1() const { return fprime1_; }
    double lipschitz_bound() const { return lipschitz_; }
    bool strong_kpp() const { return strong_kpp_; }
    double c_g() const { return c_g_; }
    double C_g() const { return C_g_; }
    /// g''(0)/2, by Richardson extrapolation of g(h)/h^2.
    double quad_coeff() const { return quad_coeff_; }
    const std::string& name() const { return name_; }

    /// Tolerance used by the sampled KPP checks.
    static constexpr double kCheckTol = 1e-10;

private:
    std::string name_;
    Fn f_;
    double fprime0_;
    double fprime1_;
    double lipschitz_ = 0.0;
    bool strong_kpp_ = false;
    double c_g_ = 0.0;
    double C_g_ = 0.0;
    double quad_coeff_ = 0.0;
};

/// g(s) = f'(0) s - f(s); nonnegative, zero on s <= 0.
double residual_g(const KppNonlinearity& f, double s);

/// Wave speed c >= c* together with its tail decay rate.
struct SpeedPair {
    double c;
    double lambda;       ///< smaller root of lambda^2 - c lambda + f'(0) = 0
    double lambda_star;  ///< sqrt(f'(0))
    double c_star;       ///< 2 sqrt(f'(0))
    double mu;           ///< sqrt(c^2 - c*^2)

    bool critical() const { return mu == 0.0; }
};

/// Throws DomainError naming c* when c < c*.
SpeedPair lambda_of_c(double c, double fprime0);

/// Inverse map lambda -> lambda + f'(0)/lambda, for lambda in (0, lambda*].
double speed_of_lambda(double lambda, double fprime0);

/// Above this exponent the exponential weights are not formed explicitly.
inline constexpr double kExponentCap = 700.0;

/// e^{w (x - c t)} g(e^{-w (x - c t)} s).
///
/// With (w, c) = (lambda*, c*) this is the leading-edge absorption R; with
/// (lambda, c) it is the H2 variant and with (c/2, c) the half-speed variant.
/// Past the exponent cap the value is replaced by the bound C_g e^{-E} s^2
/// computed in log space.
double r_weighted(const KppNonlinearity& f, double weight, double speed,
                  double t, double x, double s);

inline double r_leading_edge(const KppNonlinearity& f, double lambda_star, double c_star,
                             double t, double x, double s) {
    return r_weighted(f, lambda_star, c_star, t, x, s);
}

}  // namespace kpp
