#include "kppfront/rd_solver.hpp"

#include "kppfront/errors.hpp"
#include "kppfront/linear_tail.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

namespace kpp {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kBlocks = 64;
}  // namespace

const char* to_string(FrameKind k) {
    switch (k) {
        case FrameKind::Lab: return "lab";
        case FrameKind::Comoving: return "comoving";
        case FrameKind::LeadingEdge: return "leading-edge";
        case FrameKind::Flat: return "flat";
        case FrameKind::HalfSpeed: return "half-speed";
    }
    return "?";
}

const char* to_string(DataFamily f) {
    switch (f) {
        case DataFamily::H1: return "H1";
        case DataFamily::H2: return "H2";
        case DataFamily::Localized: return "localized";
        case DataFamily::WaveProfile: return "wave";
        case DataFamily::Constant: return "constant";
    }
    return "?";
}

// ---- snapshots -------------------------------------------------------------------

double FieldSnapshot::u(std::size_t i) const {
    const double wy = frame.weight * y[i];
    if (log_scale) return std::exp(values[i] - wy);
    return wy == 0.0 ? values[i] : values[i] * std::exp(-wy);
}

std::vector<double> FieldSnapshot::lab_values() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = u(i);
    return out;
}

// ---- initial data ------------------------------------------------------------------

FrontInitialData FrontInitialData::tail(DataFamily fam, double a1, double a2, double power, double decay,
                                        double A, std::uint64_t seed) {
    if (!(a1 > 0.0 && a2 >= a1)) throw ConfigError(fmt::format("need 0 < a1 <= a2 (got {}, {})", a1, a2));
    if (!(decay > 0.0 && A > 0.0)) throw ConfigError("need a positive decay rate and junction A");
    FrontInitialData d;
    d.family_ = fam;
    d.a1_ = a1;
    d.a2_ = a2;
    d.power_ = power;
    d.decay_ = decay;
    d.A_ = A;
    d.block_amp_.resize(kBlocks);
    if (seed == 0) {
        for (int j = 0; j < kBlocks; ++j) d.block_amp_[j] = j % 2 == 0 ? a1 : a2;
    } else {
        std::mt19937_64 gen(seed);
        std::uniform_real_distribution<double> amp(a1, a2);
        for (int j = 0; j < kBlocks; ++j) d.block_amp_[j] = amp(gen);
    }
    d.setup_join();
    return d;
}

FrontInitialData FrontInitialData::h1(double a1, double a2, double k, double lambda_star, double A,
                                      std::uint64_t seed) {
    return tail(DataFamily::H1, a1, a2, k + 1.0, lambda_star, A, seed);
}

FrontInitialData FrontInitialData::h2(double a1, double a2, double nu, double lambda, double A,
                                      std::uint64_t seed) {
    return tail(DataFamily::H2, a1, a2, nu, lambda, A, seed);
}

FrontInitialData FrontInitialData::localized() {
    FrontInitialData d;
    d.family_ = DataFamily::Localized;
    return d;
}

FrontInitialData FrontInitialData::wave(std::shared_ptr<const WaveProfile> profile, double shift) {
    FrontInitialData d;
    d.family_ = DataFamily::WaveProfile;
    d.decay_ = profile->speed().lambda;
    d.profile_ = std::move(profile);
    d.shift_ = shift;
    return d;
}

FrontInitialData FrontInitialData::constant(double value) {
    if (value != 0.0 && value != 1.0) throw ConfigError("constant data must be 0 or 1");
    FrontInitialData d;
    d.family_ = DataFamily::Constant;
    d.const_ = value;
    return d;
}

// ln u0 on [0, A] is L_A (q s^2 + (1-q) s^3), s = x/A, matching value and slope at A with
// zero slope at 0; q in [0, 3] keeps it monotone, otherwise L_A s^p is used.
void FrontInitialData::setup_join() {
    const double LA = std::log(block_amp_[0]) + power_ * std::log(A_) - decay_ * A_;
    const double dLA = power_ / A_ - decay_;
    if (!(LA < 0.0))
        throw ConfigError(fmt::format("a x^e e^(-decay x) = {:.4g} at the junction A={}; it must be below 1",
                                      std::exp(LA), A_));
    if (!(dLA < 0.0))
        throw ConfigError(fmt::format("envelope still increasing at A={}; take A > {}", A_, power_ / decay_));
    join_LA_ = LA;
    join_p_ = A_ * dLA / LA;
    join_power_ = join_p_ > 3.0;
    join_q_ = 3.0 - join_p_;
}

double FrontInitialData::amplitude(double x) const {
    if (block_amp_.empty()) return 1.0;
    if (x < 2.0 * A_) return block_amp_[0];
    const int j = std::min(kBlocks - 1, static_cast<int>(std::floor(std::log2(x / A_))));
    const double start = A_ * std::ldexp(1.0, j);
    const double s = (x - start) / (0.1 * start);
    if (s >= 1.0 || j == 0) return block_amp_[j];
    const double w = 0.5 * (1.0 - std::cos(std::numbers::pi * s));
    return block_amp_[j - 1] + (block_amp_[j] - block_amp_[j - 1]) * w;
}

double FrontInitialData::log_u0(double x) const {
    switch (family_) {
        case DataFamily::Constant: return const_ > 0.0 ? 0.0 : kNegInf;
        case DataFamily::Localized:
            if (x <= 0.0) return 0.0;
            return x < 1.0 ? std::log1p(-x) : kNegInf;
        case DataFamily::WaveProfile: {
            const double z = x - shift_;
            const auto& W = *profile_;
            if (z <= W.z_max()) return std::log(W(z));
            const double lam = W.speed().lambda;
            if (W.normalization() == TailNormalization::Critical) return std::log(z + W.tail_b()) - lam * z;
            return -lam * z;
        }
        case DataFamily::H1:
        case DataFamily::H2: {
            if (x <= 0.0) return 0.0;
            if (x < A_) {
                const double s = x / A_;
                if (join_power_) return join_LA_ * std::pow(s, join_p_);
                return join_LA_ * s * s * (join_q_ + (1.0 - join_q_) * s);
            }
            return std::log(amplitude(x)) + power_ * std::log(x) - decay_ * x;
        }
    }
    return kNegInf;
}

double FrontInitialData::u0(double x) const { return std::exp(log_u0(x)); }

double FrontInitialData::weighted(double x, double w) const {
    // on the power tail, cancel the exponentials analytically: far out w x and decay x
    // are both huge and their difference would carry a relative error of x * eps
    if ((family_ == DataFamily::H1 || family_ == DataFamily::H2) && x >= A_)
        return amplitude(x) * std::exp((w - decay_) * x + power_ * std::log(x));
    return std::exp(w * x + log_u0(x));
}

std::vector<double> FrontInitialData::kinks() const {
    switch (family_) {
        case DataFamily::H1:
        case DataFamily::H2: return {0.0, A_};
        case DataFamily::Localized: return {0.0, 1.0};
        default: return {};
    }
}

// ---- grids -------------------------------------------------------------------------

std::vector<double> make_nodes(const GridSpec& g) {
    if (!(g.dx > 0.0 && g.uniform_end > g.left && g.right >= g.uniform_end && g.stretch >= 1.0))
        throw ConfigError("grid needs dx > 0, left < uniform_end <= right and stretch >= 1");
    std::vector<double> y;
    const long n = std::lround(std::ceil((g.uniform_end - g.left) / g.dx));
    for (long i = 0; i <= n; ++i) y.push_back(g.left + i * g.dx);
    double h = g.dx;
    while (y.back() < g.right) {
        h *= g.stretch;
        y.push_back(y.back() + h);
    }
    return y;
}

FieldSnapshot build_initial(const FrontInitialData& data, const Frame& frame, const GridSpec& grid) {
    if (data.family() != DataFamily::Localized && data.family() != DataFamily::Constant &&
        grid.dx > 1.0 / (8.0 * data.decay()))
        throw ResolutionError(fmt::format("dx={} gives fewer than 8 points per decay length 1/{:.4g}", grid.dx,
                                          data.decay()));
    FieldSnapshot s;
    s.frame = frame;
    s.y = make_nodes(grid);
    s.values.resize(s.y.size());
    for (std::size_t i = 0; i < s.y.size(); ++i) s.values[i] = data.weighted(s.y[i], frame.weight);
    s.left = data.u0(s.y.front()) >= 1.0 - 1e-8 ? LeftBoundary::PinnedOne : LeftBoundary::NeumannU;
    s.right = frame.weight > 0.0 ? RightBoundary::LinearSolution : RightBoundary::Envelope;
    return s;
}

FieldSnapshot frame_transform(const FieldSnapshot& s, const Frame& target, bool log_space) {
    FieldSnapshot r = s;
    r.frame = target;
    r.log_scale = log_space;
    const double shift = (s.frame.speed - target.speed) * s.t;
    for (std::size_t i = 0; i < s.size(); ++i) {
        r.y[i] = s.y[i] + shift;
        const double e = target.weight * r.y[i] - s.frame.weight * s.y[i];
        const double lv = s.log_scale ? s.values[i] : (s.values[i] > 0.0 ? std::log(s.values[i]) : kNegInf);
        if (log_space) {
            r.values[i] = lv + e;
        } else if (!s.log_scale && e == 0.0) {
            r.values[i] = s.values[i];
        } else {
            if (lv + e > std::log(std::numeric_limits<double>::max()))
                throw RangeError(fmt::format("weight e^{:.1f} overflows at x={:.3f}; use log-space storage", e,
                                             s.x(i)));
            r.values[i] = s.log_scale ? std::exp(lv + e) : s.values[i] * std::exp(e);
        }
    }
    return r;
}

double envelope_rate(double omega, double fprime0) {
    const double disc = omega * omega - 4.0 * fprime0;
    if (disc < 0.0) throw DomainError(fmt::format("envelope speed {} is below c* = {}", omega, 2 * std::sqrt(fprime0)));
    return 2.0 * fprime0 / (omega + std::sqrt(disc));
}

FieldSnapshot domain_manager(const FieldSnapshot& s, const DomainPolicy& policy,
                             const std::function<double(double, double)>& fill) {
    if (s.log_scale) throw DomainError("domain management works on linear-scale snapshots");
    std::ptrdiff_t front = -1;
    for (std::size_t i = s.size(); i-- > 0;)
        if (s.u(i) >= policy.level) {
            front = static_cast<std::ptrdiff_t>(i);
            break;
        }
    if (front < 0) return s;
    const double yf = s.y[front];
    const double dx = s.y[1] - s.y[0];
    std::size_t iu = 0;
    while (iu + 1 < s.size() && s.y[iu + 1] - s.y[iu] < 1.0001 * dx) ++iu;
    const double uniform_end = s.y[iu];
    const double need = policy.margin * std::sqrt(std::max(s.t, 1.0)) + 20.0;
    // a front at rest in its frame only needs a fixed uniform collar; in the lab frame the
    // front runs into the uniform part, which is then kept margin sqrt(t) ahead
    const bool moving = s.frame.speed == 0.0;
    const double collar = moving ? need : policy.uniform_ahead;
    // weighted frames stop short: e^{w y} must stay representable
    const double reach = s.frame.weight > 0.0 ? 1.5 * need : 3.0 * need;
    const bool grow_right = uniform_end < yf + collar || s.y.back() < yf + (2.0 / 3.0) * reach;
    const bool grow_left = yf - s.y.front() < policy.left_gap;
    const bool trim_left = yf - s.y.front() > 4.0 * policy.left_gap && s.left == LeftBoundary::PinnedOne;
    if (!grow_right && !grow_left && !trim_left) return s;

    double lo = s.y.front();
    if (grow_left || trim_left) lo = yf - 2.0 * policy.left_gap;
    double ue = uniform_end, hi = s.y.back();
    if (grow_right) {
        ue = std::max(uniform_end, yf + 1.5 * collar);
        hi = std::max({hi, ue, yf + reach});
    }
    // keep the old uniform nodes exactly where they are
    const double n0 = std::ceil((s.y.front() - lo) / dx - 1e-9);
    lo = s.y.front() - n0 * dx;
    std::vector<double> ny;
    for (long i = 0; lo + i * dx <= ue + 1e-9 * dx; ++i) ny.push_back(lo + i * dx);
    if (ny.back() < uniform_end - 1e-9 * dx) ny.push_back(uniform_end);
    double h = dx;
    while (ny.back() < hi) {
        h *= policy.stretch;
        ny.push_back(ny.back() + h);
    }

    FieldSnapshot r = s;
    r.y = ny;
    r.values.assign(ny.size(), 0.0);
    const double w = s.frame.weight;
    std::size_t j = 0;
    for (std::size_t i = 0; i < ny.size(); ++i) {
        const double y = ny[i];
        if (y < s.y.front() - 1e-9 * dx) {
            r.values[i] = std::exp(w * y);
            continue;
        }
        if (y > s.y.back() + 1e-9 * dx) {
            r.values[i] = std::exp(w * y + fill(s.t, y + s.frame.speed * s.t));
            continue;
        }
        while (j + 2 < s.size() && s.y[j + 1] < y) ++j;
        const double y0 = s.y[j], y1 = s.y[j + 1], v0 = s.values[j], v1 = s.values[j + 1];
        const double th = std::clamp((y - y0) / (y1 - y0), 0.0, 1.0);
        if (th < 1e-9) r.values[i] = v0;
        else if (th > 1 - 1e-9) r.values[i] = v1;
        else if (v0 > 0.0 && v1 > 0.0) r.values[i] = std::exp((1 - th) * std::log(v0) + th * std::log(v1));
        else r.values[i] = (1 - th) * v0 + th * v1;
    }
    if (grow_left || trim_left) r.left = LeftBoundary::PinnedOne;
    return r;
}

// ---- solver ------------------------------------------------------------------------------

namespace {

// Far-field values decay into the subnormal range, where x86 arithmetic is ~100x
// slower; flush them to zero for the duration of a step.
class FlushDenormals {
public:
#if defined(__SSE2__)
    FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
    ~FlushDenormals() { _mm_setcsr(saved_); }
private:
    unsigned saved_;
#endif
};

double data_speed(const FrontInitialData& data, double fprime0) {
    switch (data.family()) {
        case DataFamily::H2: return speed_of_lambda(data.decay(), fprime0);
        case DataFamily::WaveProfile: return speed_of_lambda(data.decay(), fprime0);
        default: return 2.0 * std::sqrt(fprime0);
    }
}

}  // namespace

RdSolver::RdSolver(KppNonlinearity f, FrontInitialData data, Frame frame, GridSpec grid, SolverOptions opt)
    : f_(std::move(f)), data_(std::move(data)), grid_(grid), opt_(opt) {
    cur_ = build_initial(data_, frame, grid_);
    dt_ = opt_.dt > 0.0 ? opt_.dt : std::min(0.25, grid_.dx);
    const double w = frame.weight, s = frame.speed, f0 = f_.fprime0();
    d_ = s - 2.0 * w;
    l_total_ = w * w - s * w + f0;
    l_imp_ = std::min(l_total_, 0.0);
    sigma_ = 1.0;
    if (w > 0.0 && opt_.equilibrium_fix) {
        const double h = grid_.dx;
        const double kap = (2.0 * std::cosh(w * h) - 2.0) / (h * h);
        sigma_ = (kap + d_ * std::sinh(w * h) / h + l_total_) / f0;
    }
    omega_ = opt_.omega_factor * data_speed(data_, f0);
    lam1_ = envelope_rate(omega_, f0);
    // theta = sup_x u0(x) e^{lam1 x}, taken over a dense sample
    double lt = 0.0;
    if (data_.family() != DataFamily::Constant) {
        const double xmax = std::max(50.0 * data_.junction(), 400.0 / std::max(data_.decay() - lam1_, 1e-3));
        for (int i = 0; i <= 200000; ++i) {
            const double x = xmax * i / 200000.0;
            lt = std::max(lt, data_.log_u0(x) + lam1_ * x);
        }
    }
    theta_ = std::exp(lt) * (1.0 + 1e-9);
    rebuild_weights();
}

void RdSolver::rebuild_weights() {
    ew_.resize(cur_.size());
    for (std::size_t i = 0; i < cur_.size(); ++i) ew_[i] = std::exp(-cur_.frame.weight * cur_.y[i]);
    prev_.clear();
    fac_size_ = 0;
}

void RdSolver::set_state(FieldSnapshot s) {
    if (s.frame.kind != cur_.frame.kind || s.log_scale) throw DomainError("set_state needs a linear snapshot in the solver's frame");
    cur_ = std::move(s);
    rebuild_weights();
}

double RdSolver::envelope(double t, double x) const {
    if (data_.family() == DataFamily::Constant) return data_.u0(0.0);
    return std::min(1.0, theta_ * std::exp(-lam1_ * (x - omega_ * t)));
}

double RdSolver::log_upper_bound(double t, double x) const {
    if (data_.family() == DataFamily::Constant) return data_.log_u0(0.0);
    if (t <= 0.0) return data_.log_u0(x);
    const double le = std::min(0.0, std::log(theta_) - lam1_ * (x - omega_ * t));
    // e^{-lam (x - c t)} Heat[e^{lam z} u0](t, x - c t + mu t) solves the linearised problem;
    // the weighted datum only grows polynomially, so the Gaussian window stays valid
    const double lam = data_.decay(), c = speed_of_lambda(lam, f_.fprime0());
    const double y = x - c * t;
    auto psi0 = [this, lam](double z) { return data_.weighted(z, lam); };
    const double inf = std::numeric_limits<double>::infinity();
    const double h = heat_eval_free(psi0, t, y + (c - 2.0 * lam) * t, -inf, inf, data_.kinks());
    const double ll = h > 0.0 ? std::log(h) - lam * y : kNegInf;
    return std::min(le, ll);
}

double RdSolver::upper_bound(double t, double x) const { return std::exp(log_upper_bound(t, x)); }

double RdSolver::linear_solution(double t, double y) const {
    return std::exp(cur_.frame.weight * y + log_upper_bound(t, y + cur_.frame.speed * t));
}

// The far-field value varies on the diffusive time scale, so it is sampled every
// max(dt, 0.2% of t) and ln u is extrapolated linearly in between.
double RdSolver::right_edge_log_u(double t, double dt) {
    const double yr = cur_.y.back();
    auto eval = [&](double tt) { return log_upper_bound(tt, yr + cur_.frame.speed * tt); };
    if (edge_y_ != yr || edge_t1_ < 0.0 || t < edge_t1_) {
        edge_y_ = yr;
        edge_t0_ = -1.0;
        edge_t1_ = t;
        edge_l1_ = eval(t);
        return edge_l1_;
    }
    if (t - edge_t1_ >= std::max(dt, 2e-3 * edge_t1_) * (1.0 - 1e-12)) {
        edge_t0_ = edge_t1_;
        edge_l0_ = edge_l1_;
        edge_t1_ = t;
        edge_l1_ = eval(t);
        return edge_l1_;
    }
    if (edge_t0_ < 0.0 || !std::isfinite(edge_l0_) || !std::isfinite(edge_l1_)) return edge_l1_;
    return edge_l1_ + (edge_l1_ - edge_l0_) * (t - edge_t1_) / (edge_t1_ - edge_t0_);
}

void RdSolver::explicit_part(const std::vector<double>& phi, std::vector<double>& out) const {
    const double extra = l_total_ - l_imp_;
    const double q2 = f_.quad_coeff();
    out.resize(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double u = phi[i] * ew_[i];
        double R = 0.0;
        if (u > 1e-30) {
            const double g = u < 1e-5 ? q2 * u * u : residual_g(f_, u);
            R = g / ew_[i];
        }
        out[i] = extra * phi[i] - sigma_ * R;
    }
}

void RdSolver::factorize(double dt, double alpha) {
    const auto& y = cur_.y;
    const std::size_t n = y.size();
    const double w = cur_.frame.weight;
    fm_.assign(n, 0.0);
    fb_.assign(n, 1.0);
    fc_.assign(n, 0.0);
    std::vector<double> a(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hm = y[i] - y[i - 1], hp = y[i + 1] - y[i], H = hm + hp;
        const double am = 2.0 / (hm * H) - d_ / H;
        const double cp = 2.0 / (hp * H) + d_ / H;
        a[i] = -dt * am;
        fc_[i] = -dt * cp;
        fb_[i] = alpha + dt * (am + cp) - dt * l_imp_;
    }
    if (cur_.left == LeftBoundary::NeumannU) fc_[0] = -std::exp(w * (y[0] - y[1]));
    // LU without pivoting; the matrix is diagonally dominant
    for (std::size_t i = 1; i < n; ++i) {
        fm_[i] = a[i] / fb_[i - 1];
        fb_[i] -= fm_[i] * fc_[i - 1];
    }
    for (auto& v : fb_) v = 1.0 / v;
    fac_dt_ = dt;
    fac_alpha_ = alpha;
    fac_left_ = cur_.left;
    fac_size_ = n;
}

void RdSolver::step(double dt) {
    FlushDenormals ftz;
    const auto& y = cur_.y;
    auto& phi = cur_.values;
    const std::size_t n = phi.size();
    const double w = cur_.frame.weight;
    const bool bdf2 = opt_.scheme == TimeScheme::Sbdf2 && prev_.size() == n && prev_dt_ == dt;

    explicit_part(phi, n0_);
    rhs_.resize(n);
    const double alpha = bdf2 ? 1.5 : 1.0;
    if (bdf2) {
        for (std::size_t i = 0; i < n; ++i) rhs_[i] = 2.0 * phi[i] - 0.5 * prev_[i] + dt * (2.0 * n0_[i] - n1_[i]);
    } else {
        for (std::size_t i = 0; i < n; ++i) rhs_[i] = phi[i] + dt * n0_[i];
    }
    rhs_[0] = cur_.left == LeftBoundary::PinnedOne ? std::exp(w * y[0]) : 0.0;
    // right edge, at the new time
    const double tn = cur_.t + dt;
    rhs_[n - 1] = std::exp(w * y[n - 1] + right_edge_log_u(tn, dt));

    if (opt_.scheme == TimeScheme::Sbdf2) {
        prev_ = phi;
        prev_dt_ = dt;
        n1_.swap(n0_);
    }
    if (fac_size_ != n || fac_dt_ != dt || fac_alpha_ != alpha || fac_left_ != cur_.left) factorize(dt, alpha);
    for (std::size_t i = 1; i < n; ++i) rhs_[i] -= fm_[i] * rhs_[i - 1];
    rhs_[n - 1] *= fb_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs_[i] = (rhs_[i] - fc_[i] * rhs_[i + 1]) * fb_[i];
    phi.swap(rhs_);
    cur_.t = tn;
    ++steps_;

    if (w == 0.0) {
        double mx = 0.0;
        for (auto& v : phi) {
            if (!std::isfinite(v)) throw StabilityError(fmt::format("non-finite value at t={:g}; try dt={:g}", tn, dt / 2));
            if (v < 0.0 && v >= -kEpsNum) v = 0.0;
            if (v > 1.0 && v <= 1.0 + kEpsNum) v = 1.0;
            mx = std::max(mx, v);
        }
        if (mx > 1.0 + 1e-6)
            throw StabilityError(fmt::format("sup u = {:.8g} > 1 at t={:g}; try dt={:g}", mx, tn, dt / 2));
    } else if (steps_ % 64 == 0) {
        for (std::size_t i = 0; i < n; ++i) {
            const double u = phi[i] * ew_[i];
            if (!std::isfinite(phi[i]) || u > 1.0 + 1e-6)
                throw StabilityError(fmt::format("u = {:.8g} at x={:.3f}, t={:g}; try dt={:g}", u, cur_.x(i), tn, dt / 2));
        }
    }
    if (cur_.left == LeftBoundary::NeumannU && phi[0] * ew_[0] > 1.0 - 1e-8) cur_.left = LeftBoundary::PinnedOne;
    if (opt_.domain_check_every > 0 && steps_ % opt_.domain_check_every == 0) check_domain();
}

void RdSolver::check_domain() {
    auto fill = [this](double t, double x) { return log_upper_bound(t, x); };
    const std::size_t before = cur_.size();
    FieldSnapshot r = domain_manager(cur_, opt_.domain, fill);
    if (r.size() != before) {
        cur_ = std::move(r);
        rebuild_weights();
    }
}

const FieldSnapshot& RdSolver::run_until(double t_end, const std::function<void(const FieldSnapshot&)>& observer,
                                         const std::vector<double>& obs_times) {
    if (t_end <= cur_.t) return cur_;
    const long n = std::max(1L, static_cast<long>(std::ceil((t_end - cur_.t) / dt_ - 1e-9)));
    const double h = (t_end - cur_.t) / n;
    std::size_t next = 0;
    while (next < obs_times.size() && obs_times[next] < cur_.t - 1e-12) ++next;
    for (long k = 0; k < n; ++k) {
        step(h);
        if (k == n - 1) cur_.t = t_end;
        // several observation times can fall inside one step; report the state once
        bool passed = false;
        while (next < obs_times.size() && obs_times[next] <= cur_.t + 1e-9 * h) {
            passed = true;
            ++next;
        }
        if (passed && observer) observer(cur_);
    }
    return cur_;
}

// ---- checkpoints -----------------------------------------------------------------------

void write_checkpoint(std::ostream& os, const FieldSnapshot& s) {
    os << "# kppfront checkpoint v1\n";
    os << fmt::format("# t={:.17g} frame={} weight={:.17g} speed={:.17g} log_scale={}\n", s.t, to_string(s.frame.kind),
                      s.frame.weight, s.frame.speed, s.log_scale ? 1 : 0);
    os << "x,y,value\n";
    for (std::size_t i = 0; i < s.size(); ++i) os << fmt::format("{:.17g},{:.17g},{:.17g}\n", s.x(i), s.y[i], s.values[i]);
}

FieldSnapshot read_checkpoint(std::istream& is) {
    FieldSnapshot s;
    std::string line;
    std::getline(is, line);
    if (line.rfind("# kppfront checkpoint", 0) != 0) throw ConfigError("not a checkpoint file");
    std::getline(is, line);
    std::istringstream hs(line.substr(1));
    std::string tok;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
        if (k == "t") s.t = std::stod(v);
        else if (k == "weight") s.frame.weight = std::stod(v);
        else if (k == "speed") s.frame.speed = std::stod(v);
        else if (k == "log_scale") s.log_scale = v == "1";
        else if (k == "frame") {
            for (auto fk : {FrameKind::Lab, FrameKind::Comoving, FrameKind::LeadingEdge, FrameKind::Flat, FrameKind::HalfSpeed})
                if (v == to_string(fk)) s.frame.kind = fk;
        }
    }
    std::getline(is, line);  // column names
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, c;
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        std::getline(ls, c, ',');
        s.y.push_back(std::stod(b));
        s.values.push_back(std::stod(c));
    }
    return s;
}

}  // namespace kpp
