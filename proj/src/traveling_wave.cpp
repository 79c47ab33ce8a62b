#include "kppfront/traveling_wave.hpp"

#include "kppfront/errors.hpp"

#include <algorithm>
#include <array>
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <fmt/format.h>
#include <ostream>

namespace kpp {

struct WaveProfile::Interp {
    boost::math::interpolators::cubic_hermite<std::vector<double>> h;
};

WaveProfile::WaveProfile(SpeedPair speed, TailNormalization norm, std::vector<double> z,
                         std::vector<double> U, std::vector<double> dU, double tail_b, double eps_tail)
    : speed_(speed), norm_(norm), z_(std::move(z)), U_(std::move(U)), dU_(std::move(dU)),
      tail_b_(tail_b), eps_tail_(eps_tail) {
    auto zc = z_;
    auto uc = U_;
    auto dc = dU_;
    interp_ = std::make_shared<const Interp>(Interp{{std::move(zc), std::move(uc), std::move(dc)}});
}

double WaveProfile::operator()(double z) const {
    if (z <= z_.front()) return U_.front();
    if (z >= z_.back()) {
        const double lam = speed_.lambda;
        return norm_ == TailNormalization::Critical ? (z + tail_b_) * std::exp(-lam * z) : std::exp(-lam * z);
    }
    return interp_->h(z);
}

double WaveProfile::derivative(double z) const {
    if (z <= z_.front()) return 0.0;
    if (z >= z_.back()) {
        const double lam = speed_.lambda;
        if (norm_ == TailNormalization::Critical) return (1.0 - lam * (z + tail_b_)) * std::exp(-lam * z);
        return -lam * std::exp(-lam * z);
    }
    return interp_->h.prime(z);
}

void WaveProfile::export_text(std::ostream& os) const {
    os << fmt::format("# wave c={:.12g} lambda={:.12g} normalization={} tail_b={:.12g}\n", speed_.c,
                      speed_.lambda, norm_ == TailNormalization::Critical ? "critical" : "supercritical",
                      tail_b_);
    os << "z U\n";
    for (std::size_t i = 0; i < z_.size(); ++i) os << fmt::format("{:.10f} {:.17g}\n", z_[i], U_[i]);
}

namespace {

using State = std::array<double, 2>;

}  // namespace

WaveProfile solve_profile(const KppNonlinearity& f, double c, const WaveGrid& grid) {
    namespace odeint = boost::numeric::odeint;
    const SpeedPair sp = lambda_of_c(c, f.fprime0());
    const bool critical = sp.mu < 1e-12;
    const double lam = sp.lambda;
    const double h = grid.dz;

    // near U = 1, W = 1 - U solves W'' + cW' + f'(1)W = 0; take the root growing in z
    const double r_plus = (-c + std::sqrt(c * c - 4.0 * f.fprime1())) / 2.0;
    if (!(r_plus > 0.0)) throw ShootingError("f'(1) must be negative for a saddle at U = 1");

    // Near the saddle the state is W = 1 - U, which keeps its relative precision; once
    // W >= 1/2 the integration switches to U so that the tail keeps its own.
    bool near_one = true;
    auto rhs = [&](const State& y, State& dy, double) {
        dy[0] = y[1];
        dy[1] = near_one ? -c * y[1] + f(1.0 - y[0]) : -c * y[1] - f(y[0]);
    };
    auto stepper = odeint::make_dense_output(1e-300, 1e-13, odeint::runge_kutta_dopri5<State>());
    State y{grid.seed, r_plus * grid.seed};
    stepper.initialize(y, 0.0, h / 4);

    std::vector<double> zs{0.0}, us{1.0 - grid.seed}, ds{-r_plus * grid.seed};
    const double fit_hi = grid.eps_tail;
    const double fit_lo = grid.eps_tail * 1e-4;
    double z_end = std::numeric_limits<double>::infinity();
    double A = 0.0, B = 0.0, shift = 0.0;
    const double z_cap = 4000.0;
    double w_prev = grid.seed;
    for (std::size_t i = 1;; ++i) {
        const double zi = static_cast<double>(i) * h;
        while (stepper.current_time() < zi) stepper.do_step(rhs);
        stepper.calc_state(zi, y);
        double u = 0.0, du = 0.0;
        bool monotone = false;
        if (near_one) {
            u = 1.0 - y[0];
            du = -y[1];
            monotone = y[0] > w_prev && y[1] > 0.0 && y[0] < 1.0;
            w_prev = y[0];
            if (y[0] >= 0.5) {
                near_one = false;
                y = State{u, du};
                stepper.initialize(y, zi, h / 4);
            }
        } else {
            u = y[0];
            du = y[1];
            monotone = u > 0.0 && u < us.back() && du < 0.0;
        }
        if (!monotone || !std::isfinite(u))
            throw ShootingError(fmt::format(
                "shooting for c={} left the monotone branch at z={:.3f} (U={:.3e}, U'={:.3e}); "
                "bracket [U(z-dz), U(z)] = [{:.3e}, {:.3e}]", c, zi, u, du, us.back(), u));
        zs.push_back(zi);
        us.push_back(u);
        ds.push_back(du);
        if (std::isinf(z_end) && u < fit_lo) {
            // tail fit on fit_lo <= U <= fit_hi: U e^{lam z} = A z + B (critical) or A (supercritical)
            double s0 = 0, s1 = 0, s2 = 0, r0 = 0, r1 = 0;
            for (std::size_t j = 0; j < us.size(); ++j) {
                if (us[j] > fit_hi || us[j] < fit_lo) continue;
                const double r = us[j] * std::exp(lam * zs[j]);
                s0 += 1;
                s1 += zs[j];
                s2 += zs[j] * zs[j];
                r0 += r;
                r1 += r * zs[j];
            }
            if (critical) {
                const double det = s0 * s2 - s1 * s1;
                A = (s0 * r1 - s1 * r0) / det;
                B = (s2 * r0 - s1 * r1) / det;
                if (!(A > 0.0)) throw ShootingError("critical tail fit produced a non-positive z-coefficient");
                shift = std::log(A) / lam;
                const double b = shift + B / A;
                // extend until |b|/z is small over the last tenth of the grid
                z_end = std::max(zi, shift + std::min(60.0 * std::abs(b), z_cap));
            } else {
                A = r0 / s0;
                shift = std::log(A) / lam;
                z_end = zi;
            }
        }
        if (zi >= z_end) break;
        if (zi > z_cap + 100.0) throw ShootingError("tail integration did not terminate");
    }

    // the table starts one cell before 1 - U reaches eps_tail; left of it the plateau applies
    std::size_t head = 0;
    while (head + 2 < us.size() && 1.0 - us[head + 1] < grid.eps_tail) ++head;
    zs.erase(zs.begin(), zs.begin() + static_cast<long>(head));
    us.erase(us.begin(), us.begin() + static_cast<long>(head));
    ds.erase(ds.begin(), ds.begin() + static_cast<long>(head));

    for (auto& z : zs) z -= shift;
    const double b = critical ? B / A + shift : 0.0;
    WaveProfile W(sp, critical ? TailNormalization::Critical : TailNormalization::Supercritical,
                  std::move(zs), std::move(us), std::move(ds), b, grid.eps_tail);

    const double res = profile_ode_residual(W, f);
    if (res > grid.ode_tol)
        throw ShootingError(fmt::format("profile ODE residual {:.3e} exceeds tolerance {:.1e}", res, grid.ode_tol));
    const auto& Z = W.z();
    const auto& U = W.U();
    const double z_tail = Z.back() - 0.1 * (Z.back() - Z.front());
    for (std::size_t i = 0; i < Z.size(); ++i) {
        if (Z[i] < z_tail) continue;
        const double shape = critical ? Z[i] * std::exp(-lam * Z[i]) : std::exp(-lam * Z[i]);
        if (std::abs(U[i] / shape - 1.0) > grid.tail_ratio_tol)
            throw ShootingError(fmt::format("tail ratio {:.4f} at z={:.2f} outside 1 +/- {}", U[i] / shape,
                                            Z[i], grid.tail_ratio_tol));
    }
    return W;
}

double profile_ode_residual(const WaveProfile& W, const KppNonlinearity& f) {
    const auto& U = W.U();
    const auto& Z = W.z();
    const double c = W.speed().c;
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < U.size(); ++i) {
        const double h = Z[i + 1] - Z[i];
        const double d2 = (-U[i + 2] + 16 * U[i + 1] - 30 * U[i] + 16 * U[i - 1] - U[i - 2]) / (12 * h * h);
        const double d1 = (-U[i + 2] + 8 * U[i + 1] - 8 * U[i - 1] + U[i - 2]) / (12 * h);
        worst = std::max(worst, std::abs(d2 + c * d1 + f(U[i])));
    }
    return worst;
}

double profile_inverse(const WaveProfile& W, double m) {
    const double eps = W.eps_tail();
    if (!(m > eps && m < 1.0 - eps))
        throw RangeError(fmt::format("level {} outside ({}, {})", m, eps, 1.0 - eps));
    const auto& U = W.U();
    const auto& Z = W.z();
    if (m > U.front() || m < U.back()) throw RangeError(fmt::format("level {} not covered by the profile grid", m));
    // U is strictly decreasing
    auto it = std::lower_bound(U.begin(), U.end(), m, std::greater<double>());
    std::size_t j = static_cast<std::size_t>(it - U.begin());
    if (j == 0) return Z.front();
    if (U[j] == m) return Z[j];
    const double a = Z[j - 1], b = Z[j];
    boost::uintmax_t iters = 100;
    auto r = boost::math::tools::toms748_solve([&](double z) { return W(z) - m; }, a, b, U[j - 1] - m, U[j] - m,
                                               boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
}

}  // namespace kpp
