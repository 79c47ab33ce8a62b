#pragma once

#include "kppfront/rd_solver.hpp"
#include "kppfront/traveling_wave.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kpp {

/// X_m(t) samples of one run.
struct FrontTrace {
    double m = 0.5;
    std::vector<double> t;
    std::vector<double> X;
    std::string run_id;
    double dx = 0.0;

    /// Appends a sample; throws DomainError unless t increases and X is finite.
    void add(double time, double position);
    std::size_t size() const { return t.size(); }
};

/// sup{x : u(x) >= m} on sampled data, refined inside the crossing cell by monotone
/// cubic interpolation. nullopt when u never reaches m.
std::optional<double> level_set(const std::vector<double>& x, const std::vector<double>& u, double m);
std::optional<double> level_set(const FieldSnapshot& s, double m);

/// One term of X(t) - c t = a ln t + b ln ln t + s.
struct FitTerm {
    enum Mode { Off, Free, Fixed };
    Mode mode = Off;
    double value = 0.0;  ///< used when Fixed

    static FitTerm off() { return {}; }
    static FitTerm free() { return {Free, 0.0}; }
    static FitTerm fixed(double v) { return {Fixed, v}; }
};

struct FitModel {
    FitTerm speed = FitTerm::fixed(2.0);
    FitTerm log_t = FitTerm::free();
    FitTerm loglog_t = FitTerm::off();
    FitTerm constant = FitTerm::free();
};

struct FitWindow {
    double lo = 0.0;
    double hi = 0.0;  ///< 0 means the last sample
};

struct FitCoefficient {
    double value = 0.0;
    double stderr_ = 0.0;  ///< 0 for fixed terms
    bool fitted = false;
};

struct AsymptoticFit {
    FitModel model;
    FitCoefficient speed, log_t, loglog_t, constant;
    FitWindow window;
    std::size_t samples = 0;
    double residual_rms = 0.0;
    double condition = 1.0;  ///< of the column-scaled weighted design

    /// c t + a ln t + b ln ln t + s with the fitted coefficients.
    double predict(double t) const;
};

/// Weighted least squares with weights 1/t over the window (default [t_end/10, t_end]).
/// Needs at least 20 samples, and t > e throughout when ln ln t is in the model.
/// Throws DegenerateFitError when the condition number exceeds 1e8.
AsymptoticFit fit_shift(const FrontTrace& trace, const FitModel& model, FitWindow window = {});

/// sup over grid points x >= 0 of |u(t, x) - U(x - shift)|.
/// RangeError when the shift is outside the grid.
double wave_distance(const FieldSnapshot& s, const WaveProfile& W, double shift);

struct ShiftMatch {
    double shift = 0.0;
    double distance = 0.0;
};

/// Minimises wave_distance over shift in [guess - half_width, guess + half_width] (Brent).
/// The default guess is X_m - U^{-1}(m) at m = 1/2.
ShiftMatch optimal_shift(const FieldSnapshot& s, const WaveProfile& W, std::optional<double> guess = {},
                         double half_width = 2.0);

/// shift(t) - law(t) along a run, averaged over the last decade.
struct SigmaEstimate {
    std::vector<double> t, shift, distance, sigma;
    double value = 0.0;
    std::vector<double> decade_drift;  ///< |sigma(t) - sigma(t/10)| from the second decade on
    double last_two_decades_drift = 0.0;  ///< max of decade_drift over the last two decades
    bool converged = true;
    std::string warning;
};

/// `law` is the drift of the front, e.g. c* t + k/(2 lambda*) ln t. Drift above `tolerance`
/// per decade sets the warning state.
SigmaEstimate estimate_sigma_infinity(const std::vector<double>& t, const std::vector<ShiftMatch>& matches,
                                      const std::function<double(double)>& law, double tolerance = 0.05);

/// Drift laws for critical and flat tails.
std::function<double(double)> drift_law_critical(const SpeedPair& sp, double k);
std::function<double(double)> drift_law_flat(const SpeedPair& sp, double nu);

/// t,X_m,X_m_minus_ct,shift_at_t under a versioned header; shift_at_t is empty when not given.
void write_trace_csv(std::ostream& os, const FrontTrace& tr, double c, const std::vector<double>& shifts = {});
FrontTrace read_trace_csv(std::istream& is);

/// Coefficient, stderr, window and condition number as key: value lines.
void write_fit_report(std::ostream& os, const AsymptoticFit& fit);

}  // namespace kpp
