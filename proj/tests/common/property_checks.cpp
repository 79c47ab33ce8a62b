#include "property_checks.hpp"

#include "kppfront/front_lab.hpp"
#include "kppfront/linear_tail.hpp"
#include "kppfront/rd_solver.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace kpp::props {

namespace {

GridSpec grid(double dx) {
    GridSpec g;
    g.dx = dx;
    g.left = -40.0;
    g.uniform_end = 60.0;
    g.right = 150.0;
    return g;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

PropertyResult odd_positive(unsigned long seed, int samples) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> lt(-1.0, 4.0), ly(-2.0, 2.5), kk(-5.0, 3.0), nn(-1.5, 3.0);
    std::bernoulli_distribution flat(0.3);
    double worst = 0.0;
    int nonpositive = 0;
    for (int i = 0; i < samples; ++i) {
        const double t = std::pow(10.0, lt(rng)), y = std::pow(10.0, ly(rng));
        const auto w0 = flat(rng) ? TailInitialData::h2(nn(rng)) : TailInitialData::h1(kk(rng));
        const double p = heat_eval_quadrature(w0, t, y);
        if (!(p > 0.0)) ++nonpositive;
        worst = std::max(worst, rel(heat_eval_quadrature(w0, t, -y), -p));
    }
    return {"oddness and positivity of p", worst < 1e-10 && nonpositive == 0,
            fmt::format("{} samples, worst odd defect {:.2e}, {} nonpositive", samples, worst, nonpositive)};
}

PropertyResult heat_sandwich() {
    int points = 0, bad = 0;
    for (double k : {-1.0, -0.75, -0.5, -0.25, 0.0, 0.5, 1.0, 2.0, 3.0})
        for (double t : {0.1, 1.0, 10.0, 100.0, 1e3, 1e4})
            for (double y : {0.05, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0}) {
                const double p = heat_eval_quadrature(TailInitialData::h1(k), t, y);
                const double w = std::pow(y, k + 1.0);
                ++points;
                if (k <= 0.0 && p > w * (1 + 1e-9)) ++bad;
                if (k >= 0.0 && p < w * (1 - 1e-9)) ++bad;
            }
    return {"heat sandwich against y^{k+1}", bad == 0, fmt::format("{} lattice points, {} out of order", points, bad)};
}

PropertyResult comparison_ordering() {
    const auto f = KppNonlinearity::fisher();
    const auto crit = lambda_of_c(2.0, 1.0);
    const auto flat = lambda_of_c(2.5, 1.0);
    struct Pair {
        FrontInitialData lo, hi;
        Frame frame;
    };
    const std::vector<Pair> pairs = {
        {FrontInitialData::h1(0.5, 0.5, -1.0, 1.0), FrontInitialData::h1(1.0, 1.0, -1.0, 1.0), Frame::leading_edge(crit)},
        {FrontInitialData::h1(0.5, 0.5, 2.0, 1.0), FrontInitialData::h1(0.8, 0.8, 2.0, 1.0), Frame::leading_edge(crit)},
        {FrontInitialData::h2(0.5, 0.5, 1.0, 0.5), FrontInitialData::h2(1.0, 1.0, 1.0, 0.5), Frame::flat(flat)},
        {FrontInitialData::constant(0.0), FrontInitialData::localized(), Frame::comoving(2.0)},
    };
    SolverOptions o;
    o.dt = 0.1;
    o.scheme = TimeScheme::Sbdf2;
    o.domain_check_every = 1 << 30;  // both runs keep the same nodes
    int checked = 0, bad = 0, unordered = 0;
    double worst = -1e300;
    for (const auto& p : pairs) {
        RdSolver a(f, p.lo, p.frame, grid(0.1), o);
        RdSolver b(f, p.hi, p.frame, grid(0.1), o);
        for (std::size_t i = 0; i < a.state().size(); ++i)
            if (a.state().u(i) > b.state().u(i) + 1e-15) ++unordered;
        for (double t : {1.0, 5.0, 20.0, 80.0, 200.0}) {
            const auto& sa = a.run_until(t);
            const auto& sb = b.run_until(t);
            for (std::size_t i = 0; i < sa.size(); ++i) {
                const double d = sa.u(i) - sb.u(i);
                worst = std::max(worst, d);
                ++checked;
                if (d > 1e-8) ++bad;
            }
        }
    }
    return {"comparison-principle ordering", bad == 0 && unordered == 0,
            fmt::format("{} pairs, {} node comparisons, worst u_lo - u_hi {:.2e}, {} violations", pairs.size(), checked,
                        worst, bad + unordered)};
}

PropertyResult frame_round_trip() {
    const auto f = KppNonlinearity::fisher();
    const auto crit = lambda_of_c(2.0, 1.0);
    const auto flat = lambda_of_c(2.5, 1.0);
    RdSolver s(f, FrontInitialData::h2(1, 1, 1.0, 0.5), Frame::lab(), grid(0.1));
    const auto u = s.run_until(5.0);
    double worst = 0.0;
    const std::vector<Frame> frames = {Frame::comoving(2.0), Frame::leading_edge(crit), Frame::flat(flat),
                                       Frame::half_speed(flat)};
    for (const auto& fr : frames) {
        const auto back = frame_transform(frame_transform(u, fr), Frame::lab());
        for (std::size_t i = 0; i < u.size(); ++i)
            if (u.values[i] > 0.0) worst = std::max(worst, rel(back.values[i], u.values[i]));
    }
    // and between two weighted frames
    const auto v = frame_transform(u, Frame::flat(flat));
    const auto vv = frame_transform(frame_transform(v, Frame::leading_edge(crit)), Frame::flat(flat));
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v.values[i] > 0.0) worst = std::max(worst, rel(vv.values[i], v.values[i]));
    return {"frame transform round trip", worst < 1e-12, fmt::format("worst relative defect {:.2e}", worst)};
}

PropertyResult grid_convergence() {
    const auto f = KppNonlinearity::fisher();
    const auto crit = lambda_of_c(2.0, 1.0);
    std::vector<double> X;
    for (double dx : {0.1, 0.05, 0.025}) {
        SolverOptions o;
        o.dt = 0.01;
        o.scheme = TimeScheme::Sbdf2;
        RdSolver s(f, FrontInitialData::h1(1, 1, 0.0, 1.0), Frame::leading_edge(crit), grid(dx), o);
        X.push_back(*level_set(s.run_until(30.0), 0.5));
    }
    const double d1 = std::abs(X[1] - X[0]), d2 = std::abs(X[2] - X[1]);
    // a second-order scheme sits at 1/4 up to O(dx^2); 1% slack keeps the next term's sign out of it
    return {"grid-convergence signature", d2 <= 0.25 * 1.01 * d1,
            fmt::format("X(30) changes {:.3e} then {:.3e}, ratio {:.5f}", d1, d2, d2 / d1)};
}

std::vector<PropertyResult> all_properties() {
    return {odd_positive(), heat_sandwich(), comparison_ordering(), frame_round_trip(), grid_convergence()};
}

}  // namespace kpp::props
