#pragma once

#include "kppfront/kpp_core.hpp"
#include "kppfront/traveling_wave.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace kpp {

/// Exponentially weighted comoving frame phi(t, y) = e^{w y} u(t, y + s t).
///
/// Lab (0, 0), Comoving (0, c), LeadingEdge (lambda*, c*), Flat (lambda, c) for
/// supercritical tails, HalfSpeed (c/2, c).
enum class FrameKind { Lab, Comoving, LeadingEdge, Flat, HalfSpeed };

const char* to_string(FrameKind k);

struct Frame {
    FrameKind kind = FrameKind::Lab;
    double weight = 0.0;
    double speed = 0.0;

    static Frame lab() { return {}; }
    static Frame comoving(double c) { return {FrameKind::Comoving, 0.0, c}; }
    static Frame leading_edge(const SpeedPair& sp) { return {FrameKind::LeadingEdge, sp.lambda_star, sp.c_star}; }
    static Frame flat(const SpeedPair& sp) { return {FrameKind::Flat, sp.lambda, sp.c}; }
    static Frame half_speed(const SpeedPair& sp) { return {FrameKind::HalfSpeed, 0.5 * sp.c, sp.c}; }
};

enum class LeftBoundary { NeumannU, PinnedOne };
enum class RightBoundary { Envelope, LinearSolution };

/// Grid solution at time t. Nodes are frame coordinates y; the lab position is y + speed t.
struct FieldSnapshot {
    double t = 0.0;
    Frame frame;
    std::vector<double> y;
    std::vector<double> values;  ///< phi, or ln phi when log_scale
    bool log_scale = false;
    LeftBoundary left = LeftBoundary::NeumannU;
    RightBoundary right = RightBoundary::Envelope;

    std::size_t size() const { return y.size(); }
    double x(std::size_t i) const { return y[i] + frame.speed * t; }
    /// Lab-frame value u at node i.
    double u(std::size_t i) const;
    std::vector<double> lab_values() const;
};

/// Values outside [-eps, 1 + eps] in the lab frame count as numerical noise only below this.
inline constexpr double kEpsNum = 1e-10;

enum class DataFamily { H1, H2, Localized, WaveProfile, Constant };

const char* to_string(DataFamily f);

/// Front-like datum u0: 1 on x <= 0, a monotone join on (0, A), a(x) x^e e^{-decay x} past A.
///
/// With a1 != a2 the amplitude a(x) alternates between them on the blocks
/// [2^j A, 2^{j+1} A) (blended over the first tenth of each block); a nonzero seed
/// draws each block's amplitude uniformly from [a1, a2] instead.
class FrontInitialData {
public:
    static FrontInitialData h1(double a1, double a2, double k, double lambda_star, double A = 10.0,
                               std::uint64_t seed = 0);
    static FrontInitialData h2(double a1, double a2, double nu, double lambda, double A = 10.0,
                               std::uint64_t seed = 0);
    /// 1 on x <= 0, 1 - x on (0, 1), 0 beyond.
    static FrontInitialData localized();
    /// U(x - shift).
    static FrontInitialData wave(std::shared_ptr<const WaveProfile> profile, double shift = 0.0);
    /// u0 = 0 or u0 = 1 everywhere; the two equilibria.
    static FrontInitialData constant(double value);

    DataFamily family() const { return family_; }
    double a1() const { return a1_; }
    double a2() const { return a2_; }
    /// k + 1 for H1, nu for H2.
    double power() const { return power_; }
    double decay() const { return decay_; }
    double junction() const { return A_; }

    double amplitude(double x) const;
    double u0(double x) const;
    /// ln u0, finite wherever u0 > 0 even past underflow.
    double log_u0(double x) const;
    /// e^{w x} u0(x) without forming the two factors separately.
    double weighted(double x, double w) const;
    /// Points where u0 is not smooth.
    std::vector<double> kinks() const;

private:
    DataFamily family_ = DataFamily::Localized;
    double a1_ = 1.0, a2_ = 1.0, power_ = 1.0, decay_ = 1.0, A_ = 10.0;
    double join_q_ = 0.0, join_p_ = 0.0, join_LA_ = 0.0;
    bool join_power_ = false;
    std::vector<double> block_amp_;
    std::shared_ptr<const WaveProfile> profile_;
    double shift_ = 0.0;
    double const_ = 0.0;

    static FrontInitialData tail(DataFamily fam, double a1, double a2, double power, double decay, double A,
                                 std::uint64_t seed);
    void setup_join();
};

/// Uniform spacing dx on [left, uniform_end], then cell sizes growing by `stretch` up to `right`.
struct GridSpec {
    double dx = 0.05;
    double left = -60.0;
    double uniform_end = 40.0;
    double right = 200.0;
    double stretch = 1.01;
};

std::vector<double> make_nodes(const GridSpec& g);

/// Snapshot of u0 in the given frame at t = 0. Throws ResolutionError when dx
/// leaves fewer than 8 points per decay length at the junction.
FieldSnapshot build_initial(const FrontInitialData& data, const Frame& frame, const GridSpec& grid);

/// Reweights into another frame at the same time and lab positions.
/// Throws RangeError if a value leaves the double range and log_space is off.
FieldSnapshot frame_transform(const FieldSnapshot& s, const Frame& target, bool log_space = false);

struct DomainPolicy {
    double margin = 10.0;       ///< keep the front margin*sqrt(max(t,1)) + 20 inside the right edge
    double left_gap = 30.0;     ///< extend left when the front gets this close to the left edge
    double level = 0.5;
    double stretch = 1.01;      ///< cell growth past the uniform part after a regrid
    double uniform_ahead = 40.0; ///< uniform collar ahead of a front at rest in its frame
};

/// Regrids when the front violates the policy. In the lab frame the uniform part is
/// pushed 1.5 margin sqrt(t) past the front; in moving frames a uniform collar of
/// uniform_ahead suffices. Stretched cells reach 3 margin sqrt(t) (1.5 for weighted frames). New right values come from `fill(t, x_lab)` (as ln u), the left edge is extended with u = 1 or
/// trimmed once the collar is saturated. Interior values are interpolated in log scale.
/// Returns the snapshot unchanged when the policy holds.
FieldSnapshot domain_manager(const FieldSnapshot& s, const DomainPolicy& policy,
                             const std::function<double(double, double)>& fill);

/// Smaller root of l^2 - omega l + f'(0) = 0 for omega > c*.
double envelope_rate(double omega, double fprime0);

enum class TimeScheme { ImexEuler, Sbdf2 };

struct SolverOptions {
    double dt = 0.0;                 ///< 0 picks min(0.25, dx)
    TimeScheme scheme = TimeScheme::ImexEuler;
    bool equilibrium_fix = true;     ///< scale R so u = 1 is an exact discrete equilibrium
    double omega_factor = 1.1;       ///< envelope speed omega = factor * c
    int domain_check_every = 50;
    DomainPolicy domain;
};

/// IMEX stepper for phi_t = phi_yy + d phi_y + l phi - R(phi), d = s - 2w, l = w^2 - s w + f'(0),
/// with R = e^{wy} g(e^{-wy} phi). The linear part (minus any positive l) is implicit.
///
/// Left edge: Neumann on u until u > 1 - 1e-8, then pinned to u = 1. Right edge: the
/// smaller of the supersolution envelope and the solution of the linearised problem
/// (an upper bound since R >= 0), so truncation over-estimates u.
class RdSolver {
public:
    RdSolver(KppNonlinearity f, FrontInitialData data, Frame frame, GridSpec grid, SolverOptions opt = {});

    const FieldSnapshot& state() const { return cur_; }
    double dt() const { return dt_; }
    const KppNonlinearity& nonlinearity() const { return f_; }
    const FrontInitialData& data() const { return data_; }

    void step(double dt);
    void step() { step(dt_); }
    /// Replaces the state (same frame); drops the multistep history.
    void set_state(FieldSnapshot s);

    /// Steps with a constant step (dt shrunk so an integer number lands on t_end), calling
    /// `observer` once per step in which the time passes one or more entries of obs_times.
    const FieldSnapshot& run_until(double t_end, const std::function<void(const FieldSnapshot&)>& observer = {},
                                   const std::vector<double>& obs_times = {});

    /// u <= min(1, theta e^{-lambda1 (x - omega t)}) supersolution used at the right edge.
    double envelope(double t, double x) const;
    double envelope_theta() const { return theta_; }
    double envelope_lambda() const { return lam1_; }
    double envelope_omega() const { return omega_; }

    /// min(1, envelope, linearised solution) in lab variables; u never exceeds it.
    double upper_bound(double t, double x) const;
    double log_upper_bound(double t, double x) const;
    /// Solution of the linearised frame equation from the initial datum (capped at u = 1).
    double linear_solution(double t, double y) const;

private:
    KppNonlinearity f_;
    FrontInitialData data_;
    GridSpec grid_;
    SolverOptions opt_;
    FieldSnapshot cur_;
    std::vector<double> prev_;  // SBDF2 history (empty after a regrid)
    double prev_dt_ = 0.0;
    std::vector<double> ew_;    // e^{-w y_i}
    std::vector<double> n0_, n1_, rhs_;
    std::vector<double> fm_, fb_, fc_;  // LU of the implicit matrix: multipliers, 1/pivots, upper
    double fac_dt_ = 0.0, fac_alpha_ = 0.0;
    LeftBoundary fac_left_ = LeftBoundary::NeumannU;
    std::size_t fac_size_ = 0;
    double dt_;
    double d_, l_total_, l_imp_, sigma_;
    double omega_, lam1_, theta_;
    long steps_ = 0;

    void rebuild_weights();
    void factorize(double dt, double alpha);
    double right_edge_log_u(double t, double dt);
    double edge_y_ = 0.0, edge_t0_ = -1.0, edge_l0_ = 0.0, edge_t1_ = -1.0, edge_l1_ = 0.0;
    void check_domain();
    void explicit_part(const std::vector<double>& phi, std::vector<double>& out) const;
};

/// Checkpoint as CSV: a comment header with t and the frame, then x,y,value rows.
void write_checkpoint(std::ostream& os, const FieldSnapshot& s);
FieldSnapshot read_checkpoint(std::istream& is);

}  // namespace kpp
