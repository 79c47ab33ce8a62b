#pragma once

#include "kppfront/kpp_core.hpp"
#include "kppfront/linear_tail.hpp"
#include "kppfront/rd_solver.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace kpp {

/// Super/subsolution constructions around the linear solution.
///
/// H1Upper / H1Lower: critical-tail data, v = e^{lambda*(x - c* t)} u.
/// H1UpperRestart / H1LowerRestart: k < -3, restarted from v(T, . + c* T) in the
/// shifted variables v~(t, x) = v(t + T, x + c* T).
/// H2Upper: flat data, v = e^{lambda(x - c t)} u. H2LowerZ: z = e^{(c/2)(x - c t)} u.
enum class BarrierKind { H1Upper, H1Lower, H1UpperRestart, H1LowerRestart, H2Upper, H2LowerZ };

const char* to_string(BarrierKind k);
BarrierKind barrier_kind_from_string(const std::string& s);
bool is_upper(BarrierKind k);

struct BarrierParams {
    double delta = 0.15, gamma = 0.153, beta = 0.156, alpha = 0.49;
    /// restart ladder, used by the two restart kinds
    double delta_s = 0.157, gamma_s = 0.158, beta_s = 0.159;
    double T = 16.0;
    double M = 1.0;  ///< amplitude of the upper cosine correction
    /// knob for the proofs' "choose eps in (0, (beta - delta)/2)"; NaN means (beta - delta)/4
    double eps = std::numeric_limits<double>::quiet_NaN();
    double tau_factor = 4.0;  ///< delayed start tau = tau_factor T for k in [-1, 0)

    double epsilon() const;
    /// Defaults for a kind: alpha = 1/2 - 1/(45 kappa) when kappa > 1; H2LowerZ uses a
    /// ladder below 4/25 with alpha on top.
    static BarrierParams defaults(BarrierKind kind, double exponent);
};

/// Everything needed to build a barrier besides the exponents.
struct BarrierSetup {
    BarrierKind kind = BarrierKind::H1Upper;
    KppNonlinearity f = KppNonlinearity::fisher();
    double exponent = 0.0;  ///< k for H1 kinds, nu for H2 kinds
    double lambda = 0.0;    ///< H2 decay rate
    double a1 = 1.0, a2 = 1.0;
    double A = 10.0;
    /// restart datum w0*(z) = v(T, z + c* T); required for the restart kinds
    std::optional<TailInitialData> restart;
};

/// Value at (t, r), where r is the offset from the kind's reference curve (see origin()).
class BarrierSpec {
public:
    BarrierSpec(BarrierSetup setup, BarrierParams params);

    BarrierKind kind() const { return setup_.kind; }
    const BarrierSetup& setup() const { return setup_; }
    const BarrierParams& params() const { return p_; }
    bool upper() const { return is_upper(setup_.kind); }

    /// Speed of the transport term in the linear operator: c* (H1), 2 lambda (H2 upper), c (z).
    double frame_speed() const { return s_; }
    /// Reference curve: s (t + T) for upper kinds, s t for lower kinds.
    double origin(double t) const;
    /// Left boundary of the region as an offset: -(t+T)^delta (upper), +(t+T)^delta (lower).
    double boundary(double t) const;
    /// Cosine length (t + T)^alpha.
    double length(double t) const;
    /// Exponent P of the cosine amplitude (t+T)^P.
    double amplitude_power() const { return P_; }
    double kappa() const { return kappa_; }
    /// mu/2 for the z kind (internal values are divided by e^{(mu/2) r}), else 0.
    double half_mu() const { return half_mu_; }
    /// xi for upper kinds, eta for lower kinds, and the derivative.
    double multiplier(double t) const;
    double multiplier_prime(double t) const;

    /// Linear component at (t, r); t = 0 gives the datum itself.
    double linear_part(double t, double r) const;
    /// Cosine correction (signed as it enters the barrier) and its closed-form operator.
    double correction(double t, double r) const;
    double correction_operator(double t, double r) const;
    /// Offset from which the weight of the reaction term is measured (x - c t, or x - c* t).
    double reaction_offset(double t, double r) const;
    double reaction(double t, double r, double value) const;

    /// Datum of the linear part, for inspection (bumps not included).
    const TailInitialData& datum() const { return datum_; }
    const std::vector<CosineBump>& bumps() const { return bumps_; }

private:
    BarrierSetup setup_;
    BarrierParams p_;
    SpeedPair sp_{};
    double s_ = 0.0, P_ = 0.0, kappa_ = 0.0, coef_ = 1.0, time_shift_ = 0.0;
    double w_reaction_ = 0.0;  ///< weight of the reaction term
    double half_mu_ = 0.0;     ///< mu/2 for the z kind, 0 otherwise
    double corr_amp_ = 1.0;    ///< M for upper kinds, 1 below, signed into correction()
    double y_shift_ = 0.0;     ///< heat-frame coordinate y = r + y_shift(t)
    TailInitialData datum_;
    std::vector<CosineBump> bumps_;  ///< centred at 0 in heat-frame offsets from bump_center_
    double bump_center_ = 0.0;

    double heat_y(double t, double r) const;
};

/// Lab position of offset r at time t (restart kinds: in the shifted variables).
double barrier_x(const BarrierSpec& b, double t, double r);

/// Barrier value; throws DomainError left of the boundary curve or for t < 0.
double eval_barrier(const BarrierSpec& b, double t, double x);
double eval_barrier_offset(const BarrierSpec& b, double t, double r);

/// m'(t) W + closed-form operator of the correction, plus the exact reaction at the barrier
/// value for lower kinds. >= 0 is required above, <= 0 below.
double operator_residual(const BarrierSpec& b, double t, double x);
double operator_residual_offset(const BarrierSpec& b, double t, double r);

/// Problems with the exponents (empty when the ladder holds).
std::vector<std::string> check_ladder(const BarrierSpec& b);
/// Closed-form conditions on T, including the positivity guard. Empty when all hold.
std::vector<std::string> check_T(const BarrierSpec& b);

enum class Zone { Inner, CosineTail, Beyond, Boundary, Initial };
const char* to_string(Zone z);

struct SamplingPlan {
    double t_lo = 1.0;
    double t_hi = 1e3;
    int per_decade = 64;
    int per_zone = 128;
    /// extent of the zone past the cosine support: beyond_L (t+T)^alpha + beyond_sqrt sqrt(t)
    double beyond_L = 3.0;
    double beyond_sqrt = 30.0;
    /// a residual counts as violated below -rel_tol times the sum of the magnitudes of its terms
    double rel_tol = 1e-7;
    unsigned threads = 0;  ///< 0: hardware concurrency
    static SamplingPlan coarse();  ///< 8 per decade x 16 per zone, for screening
};

/// Log-spaced lattice times from t_lo to t_hi inclusive.
std::vector<double> lattice_times(const SamplingPlan& plan);

struct Violation {
    double t = 0.0;
    double r = 0.0;
    double x = 0.0;
    double margin = 0.0;  ///< signed so that negative means violated
    Zone zone = Zone::Inner;
};

struct ZoneSummary {
    Zone zone = Zone::Inner;
    std::size_t points = 0;
    std::size_t violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();  ///< relative margin
    double worst_t = 0.0, worst_r = 0.0;
};

/// Solution in the barrier's variables at (t, r); used for boundary and initial ordering.
using SolutionOracle = std::function<double(double t, double r)>;

struct Certificate {
    BarrierKind kind = BarrierKind::H1Upper;
    BarrierParams params;
    std::vector<std::string> ladder_problems, T_problems;
    std::vector<ZoneSummary> zones;  ///< Inner, CosineTail, Beyond, then Boundary, Initial if checked
    std::vector<Violation> violations;
    std::size_t sign_violations = 0;
    std::size_t ordering_violations = 0;
    bool ordering_checked = false;

    bool preconditions_ok() const { return ladder_problems.empty() && T_problems.empty(); }
    /// Preconditions hold and no sign violation.
    bool sign_ok() const { return preconditions_ok() && sign_violations == 0; }
    bool passed() const { return sign_ok() && ordering_violations == 0; }
};

/// Evaluates the residual sign on the lattice (log times x uniform offsets per sub-zone,
/// sample points at cell centres so indicator edges keep a half-cell guard), plus the
/// orderings when a solution oracle is given. All violations are recorded.
Certificate certify(const BarrierSpec& b, const SamplingPlan& plan = {}, const SolutionOracle& solution = {});

struct TuneOptions {
    double T_start = 2.0;
    double T_max = 1e15;
    /// upper kinds: shrink M geometrically when only the cosine-tail zone fails. The restart
    /// datum's heavy tail at c* T bounds the usable M by roughly T^{k+5/2-beta*}.
    bool shrink_M = true;
    double M_factor = 0.125;
    int max_M_steps = 16;
    SamplingPlan screen = SamplingPlan::coarse();
    SamplingPlan full = {};
};

struct TuneResult {
    BarrierParams params;
    Certificate certificate;  ///< on the full plan
    int candidates = 0;
    std::vector<std::string> log;
};

/// Doubles T from T_start until the closed-form conditions hold and the lattice certifies.
/// Restart kinds take their datum from `restart_at(T)`. Throws TuningError on a broken
/// ladder (before any evaluation) or when T_max is exceeded, naming the binding constraint.
TuneResult autotune_T(const BarrierSetup& setup, BarrierParams draft, const TuneOptions& opt = {},
                      const std::function<TailInitialData(double)>& restart_at = {});

/// w0*(z): phi(T, z) of a leading-edge snapshot for z >= 1, linear on [0, 1], continued by
/// z^{k+1} past the grid.
TailInitialData restart_datum(const FieldSnapshot& leading_edge, double k);

/// C1, C2 with C1 z T^{-3/2} <= w0*(z) <= C2 z T^{-3/2} sampled on [T^{delta*}, sqrt T].
struct RestartEnvelope {
    double C1 = 0.0, C2 = 0.0;
};
RestartEnvelope restart_envelope(const TailInitialData& w0star, double T, double delta_s, int samples = 200);

/// Text report (advisory numerics) and a CSV of per-zone worst margins.
void write_certificate(std::ostream& os, const Certificate& c);
void write_certificate_csv(std::ostream& os, const Certificate& c);

}  // namespace kpp
