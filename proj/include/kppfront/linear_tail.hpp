#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kpp {

enum class TailFamily { H1, H2, Linear, Cubic, Restart, Custom };

const char* to_string(TailFamily f);

/// amplitude * cos((x - center)/L) on center + [pi/2, 3pi/2] L.
/// With `odd` the mirrored lobe -amplitude * cos((center - x)/L) is added on the other
/// side of `center`, so the bump is odd about it.
struct CosineBump {
    double amplitude = 0.0;
    double L = 1.0;
    double center = 0.0;
    bool odd = true;

    double operator()(double x) const;
    double lo() const;  ///< left end of the support
    double hi() const;  ///< right end of the support
    /// Integral of z * bump(z) over z > 0 for a bump odd about 0: -2 pi amplitude L^2.
    double first_moment() const;
};

/// The usual compact perturbation: sign * M * T^power * cos(x/T^alpha), odd about 0.
CosineBump chi0(double M, double T, double alpha, double power);

/// Odd initial datum of the linear problem, optionally perturbed by cosine bumps.
///
/// The base part is given on [0, inf) and extended oddly; bumps are added on the whole
/// line as they are, so a bump centred away from 0 is not reflected.
class TailInitialData {
public:
    /// z on [0,1), z^{k+1} on [1, inf).
    static TailInitialData h1(double k);
    /// z on [0,1), z^nu on [1, inf).
    static TailInitialData h2(double nu);
    static TailInitialData linear();
    static TailInitialData cubic();
    /// Monotone cubic through samples (z_i, w_i) with z_0 = 0, continued by
    /// w_n (z/z_n)^{decay_power} past the last sample. `exponent` is the k it stands in for.
    static TailInitialData restart(std::vector<double> z, std::vector<double> w, double decay_power,
                                   double exponent);
    /// `exponent` is the k whose diffusive law the data is expected to follow.
    static TailInitialData custom(std::string name, std::function<double(double)> w, double exponent,
                                  std::vector<double> kinks = {});

    /// Copy with a bump added; throws DomainError if the result goes negative on z > 0.
    TailInitialData with_bump(const CosineBump& b, bool check_nonnegative = true) const;

    TailFamily family() const { return family_; }
    /// k for the H1-type families (Linear: 0, Cubic: 2), nu for H2.
    double exponent() const { return exponent_; }
    /// Exponent in the diffusive-zone law: k, or nu - 1 for H2.
    double diffusive_k() const;
    const std::vector<CosineBump>& bumps() const { return bumps_; }
    bool has_bumps() const { return !bumps_.empty(); }

    /// Base part at z >= 0 (no bumps).
    double base(double z) const;
    /// Full datum on the real line.
    double operator()(double x) const;
    /// Points in (0, inf) where the base part is not smooth.
    const std::vector<double>& kinks() const { return kinks_; }

private:
    TailFamily family_ = TailFamily::Custom;
    double exponent_ = 0.0;
    std::shared_ptr<const std::function<double(double)>> base_;
    std::vector<double> kinks_;
    std::vector<CosineBump> bumps_;
};

/// Relative tolerance of the adaptive quadrature (error estimate against the L1 mass).
inline constexpr double kQuadTol = 1e-8;

/// p(t, y) for p_t = p_yy with p(0) = w0, by adaptive Gauss-Kronrod on the
/// odd-image kernel. Throws AccuracyError past kQuadTol.
double heat_eval_quadrature(const TailInitialData& w0, double t, double y);

/// Free-space heat solution of an arbitrary datum supported in [lo, hi] (hi may be inf).
/// `breaks` are kinks of the datum; the window is clipped to y +- 14 sqrt(t).
double heat_eval_free(const std::function<double(double)>& w, double t, double y, double lo,
                      double hi, const std::vector<double>& breaks = {});

/// Same p by the sinh expansion with incomplete-Gamma moments.
/// Requires t >= 1 and |y| <= sqrt(t); Restart and Custom data and off-centre bumps
/// are rejected with DomainError.
double heat_eval_series(const TailInitialData& w0, double t, double y);

enum class Regime { Diffusive, Outer, Ballistic };

struct LinearSolutionQuery {
    double t;
    double y;              ///< heat-frame position, x - s t for an advected frame
    Regime regime;
    double rho = 0.0;      ///< ray speed for Ballistic

    /// Throws DomainError when (t, y) is outside the regime's zone.
    void validate() const;
};

struct AsymptoticConstants {
    double varpi = 0.0;
    std::optional<double> varpi_sharp;  ///< set for perturbed data
    double lambda_big = 0.0;            ///< ballistic prefactor on the query's ray
};

/// varpi + first_moment / sqrt(4 pi); throws DomainError unless positive.
double perturbed_prefactor(double varpi, const CosineBump& b);

/// Leading-order form of p for the family and regime.
///
/// Diffusive: varpi y e^{-y^2/4t} t^{k/2} (k > -3), with an extra ln t at k = -3 and
/// t^{-3/2} below (varpi_sharp when set). Outer: the envelope y^{k+1}. Ballistic:
/// Lambda t^nu e^{-(y - rho t)^2/4t}.
double predict_asymptotic(const AsymptoticConstants& c, TailFamily family, double exponent,
                          const LinearSolutionQuery& q, double t_min = 100.0);

struct PrefactorOptions {
    Regime regime = Regime::Diffusive;
    double rho = 0.0;
    double t_min = 100.0;
    double warn_drift = 0.2;  ///< across the last two decades
};

struct PrefactorEstimate {
    AsymptoticConstants constants;
    std::vector<double> t, y, p, ratio;
    std::vector<double> decade_drift;  ///< |r(t) - r(t/10)| / |r(t)|, from the second decade on
    double max_drift = 0.0;
    double last_two_decades_drift = 0.0;
    bool converged = true;
    std::string warning;
};

/// Averages p / shape over the last decade of t_grid, where shape is the predictor
/// with unit constant at y = y_rule(t).
PrefactorEstimate estimate_prefactor(const TailInitialData& w0, const std::vector<double>& t_grid,
                                     const std::function<double(double)>& y_rule,
                                     const PrefactorOptions& opt = {});

/// n points per decade from t0 to t1 inclusive.
std::vector<double> log_grid(double t0, double t1, int per_decade = 4);

/// w(t, x) = p(t, x - s t) for w_t - w_xx + s w_x = 0.
double advected_eval(const TailInitialData& w0, double frame_speed, double t, double x);

struct Envelope {
    double C1 = 0.0;
    double C2 = 0.0;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    bool contained = false;
};

/// Bounded-time sandwich C1 y^{k+1} <= p <= C2 y^{k+1} for t in (0, t0],
/// y >= max(sqrt t, 1). C1 = (1 - e^{-1/t0})/2; C2 is the sampled maximum.
Envelope bounded_time_envelope(const TailInitialData& w0, double t0, const std::vector<double>& ts,
                               const std::vector<double>& ys);

/// t,y,p,predictor,ratio with a versioned header.
void write_ratio_csv(std::ostream& os, const PrefactorEstimate& e,
                     const std::function<double(double, double)>& predictor);

}  // namespace kpp
