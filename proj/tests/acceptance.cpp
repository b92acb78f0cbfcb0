// Acceptance run: one line per criterion, nonzero exit when any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "galerkin/control.hpp"
#include "galerkin/lie_rank.hpp"
#include "galerkin/parallel.hpp"
#include "galerkin/reports.hpp"
#include "galerkin/saturation.hpp"

using namespace galerkin;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

SpectralField random_field(const RectGeometry& g, const ModeSet& modes, std::mt19937_64& rng, double s) {
    std::normal_distribution<double> N(0.0, s);
    SpectralField u(g);
    for (const auto& k : modes) u.set(k, N(rng));
    return u;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

Outcome coefficient_oracle() {
    std::size_t total = 0, failing = 0;
    double worst = 0.0;
    for (auto [a, b] : {std::pair{1.0, 1.0}, {2.0, 1.0}, {1.0, 1.41421356}, {pi, pi}}) {
        for (const auto& r : oracle_sweep(RectGeometry(a, b), 5)) {
            ++total;
            failing += r.pass ? 0 : 1;
            worst = std::max(worst, r.rel_err);
        }
    }
    return {failing == 0 && total > 0,
            std::to_string(total) + " comparisons, " + std::to_string(failing) + " failing, worst rel " + fmt(worst)};
}

Outcome exact_algebra() {
    int checked = 0, bad = 0;
    auto expect = [&](const DeltaVector& d, const ModeIndex& k, const Rational& v) {
        ++checked;
        if (d.entry(k) != v) ++bad;
    };
    for (auto [a, b] : {std::pair{Rational(1), Rational(2)}, {Rational(3, 2), Rational(1)}, {Rational(2, 3), Rational(5, 7)}}) {
        const auto g = ExactGeometry::from_sides(a, b);
        const Rational A = g.a2, B = g.b2;
        const auto d1 = delta_vector({1, 2}, {2, 1}, g);
        expect(d1, {1, 1}, 9 * (B - A) / (A + B));
        expect(d1, {1, 3}, 15 * (A - B) / (9 * A + B));
        expect(d1, {3, 1}, 15 * (A - B) / (A + 9 * B));
        expect(d1, {3, 3}, (B - A) / (A + B));
        const auto d2 = delta_vector({1, 1}, {1, 3}, g);
        expect(d2, {2, 2}, 8 * A / (A + B));
        expect(d2, {2, 4}, -4 * A / (B + 4 * A));
        const auto d3 = delta_vector({1, 1}, {3, 1}, g);
        expect(d3, {2, 2}, -8 * B / (A + B));
        expect(d3, {4, 2}, 4 * B / (A + 4 * B));
        const auto d4 = delta_vector({1, 2}, {2, 2}, g);
        expect(d4, {1, 4}, -18 * B / (16 * A + B));
        expect(d4, {3, 4}, 6 * B / (16 * A + 9 * B));
        for (const auto* d : {&d1, &d2, &d3, &d4})
            if (d->entries.size() > (d == &d1 ? 4u : 2u)) ++bad;
    }
    int dets = 0;
    for (const Rational a : {Rational(1), Rational(2), Rational(1, 3)}) {
        const auto cert = verify_step(1, ExactGeometry::from_sides(a, a), true);
        Rational a6 = a * a * a * a * a * a;
        const std::string want = to_string(Rational(-45, 442) / a6);
        for (const auto& w : cert.witnesses)
            if (w.rows.size() == 3 && w.det_pi_units == want) ++dets;
    }
    return {bad == 0 && dets == 3, std::to_string(checked) + " exact entries, " + std::to_string(bad) +
                                       " mismatches, square determinant matched at " + std::to_string(dets) + "/3 sides"};
}

Outcome saturation_chain() {
    bool ok = true;
    std::string d;
    const auto g = ExactGeometry::from_sides(1, 2);
    for (int j = 1; j <= 4; ++j) {
        const auto c = verify_step(j, g, false);
        ok = ok && c.verdict && c.combined_rank == mode_set_K(j + 1).size();
        d += "j=" + std::to_string(j) + ":" + std::to_string(c.rank) + " ";
        if (j == 1) ok = ok && c.combined_rank == 15;
    }
    const auto sq = verify_step(1, ExactGeometry(1, 1), true);
    const auto raw = verify_step(1, ExactGeometry(1, 1), false);
    ok = ok && sq.verdict && !raw.verdict;
    for (int j = 1; j <= 5; ++j) ok = ok && mode_set_K(j).size() == static_cast<std::size_t>((j + 2) * (j + 2) - 1);
    d += "square repair " + std::string(sq.verdict ? "pass" : "fail") + ", without repair " +
         (raw.verdict ? "pass" : "fail");
    return {ok, d};
}

Outcome energy_and_skew() {
    std::mt19937_64 rng(41);
    const RectGeometry g(1, 2);
    double skew = 0.0, tri = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto u = random_field(g, mode_set_K(2), rng, 1.0), v = random_field(g, mode_set_K(2), rng, 1.0);
        skew = std::max(skew, std::abs(h_inner(quadratic(u, mode_set_K(2)), u)));
        tri = std::max(tri, std::abs(trilinear_b(u, v, v)));
    }
    GalerkinSystem sys(g, 0.05, SpectralField(g), mode_set_K(2), mode_set_K(1));
    const auto u0 = random_field(g, mode_set_K(2), rng, 1.0);
    const auto tr = integrate(sys, u0, ControlSignal::zero(8, 2.0), 2.0, 1e-9);
    bool monotone = true;
    double prev = 1e300;
    for (double t : tr.sample_times()) {
        const double h = norm(tr.state_at(t), NormKind::H);
        monotone = monotone && h <= prev * (1 + 1e-12);
        prev = h;
    }
    int bound_fail = 0;
    std::uniform_real_distribution<double> U(-1, 1);
    for (int run = 0; run < 10; ++run) {
        const auto forced = sys.with_nu(0.02 + 0.2 * std::abs(U(rng))).with_forcing(random_field(g, mode_set_K(1), rng, 0.5));
        std::vector<double> br{0.0, 0.3 + 0.2 * U(rng), 1.0};
        ControlSignal v = ControlSignal::piecewise(br, {random_field(g, mode_set_K(1), rng, 1.0).dense(ModeLayout(mode_set_K(1))),
                                                        random_field(g, mode_set_K(1), rng, 1.0).dense(ModeLayout(mode_set_K(1)))});
        const auto x0 = random_field(g, mode_set_K(2), rng, 0.5);
        const auto t = integrate(forced, x0, v, 1.0, 1e-10);
        const auto ts = t.sample_times();
        const auto bound = energy_bound(forced, x0, v, ts);
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double h = norm(t.state_at(ts[i]), NormKind::H);
            if (h > bound[i] * (1 + 1e-10)) ++bound_fail;
        }
    }
    return {skew < 1e-10 && tri < 1e-10 && monotone && bound_fail == 0,
            "max |(B(u),u)| " + fmt(skew) + ", max |b(u,v,v)| " + fmt(tri) + ", decay " +
                (monotone ? "monotone" : "not monotone") + ", bound violations " + std::to_string(bound_fail)};
}

Outcome deviation_and_covering(Outcome& covering) {
    const RectGeometry g(1, 2);
    GalerkinSystem sys(g, 1.0, SpectralField(g), mode_set_K(3), mode_set_K(1));
    SpectralField u0(g, {{{1, 1}, 0.2}, {{2, 1}, -0.1}, {{1, 2}, 0.15}, {{2, 2}, 0.05}});
    EndpointExperiment exp(sys, mode_set_K(1), u0, 0.1, 2.0, 1.0, 1e-11);
    const double T0 = viscous_window_horizon(exp);
    exp.T = T0;
    const auto probes = deviation_probes(exp, 8, 7);
    const unsigned jobs = resolve_jobs(std::thread::hardware_concurrency());
    const auto fit = deviation_sweep(exp, {T0, T0 / 2, T0 / 4, T0 / 8}, probes, 0.35, 0.65, jobs);
    CoveringOptions copt;
    copt.jobs = jobs;
    const auto cov = covering_check(exp, fit.C, copt);
    covering = {cov.pass, std::to_string(cov.targets.size()) + " targets at T0 = " + fmt(cov.T) + ", max residual " +
                              fmt(cov.max_residual)};
    return {fit.pass, "slope " + fmt(fit.slope) + " over T0 = " + fmt(T0) + " .. T0/8"};
}

Outcome tracking() {
    const RectGeometry g(1, 2);
    GalerkinSystem sys(g, 0.2, SpectralField(g), mode_set_K(3), mode_set_K(1));
    const auto Kc = set_difference(mode_set_K(3), mode_set_K(1));
    const double tol = 1e-10;
    double worst = 0.0;
    for (unsigned s = 0; s < 5; ++s) {
        const auto q = random_smooth_target(8, 1.0, 100 + s);
        const auto tr = tracking_control(sys, mode_set_K(1), q, Eigen::VectorXd::Zero(Kc.size()), 0.0, 1.0, tol);
        worst = std::max(worst, replay_tracking(sys, tr, q, Eigen::VectorXd::Zero(Kc.size()), 0.0, 1.0, tol).max_error);
    }
    return {worst <= 10 * tol, "max replay error " + fmt(worst) + " against " + fmt(10 * tol)};
}

Outcome imitation() {
    const RectGeometry g(1, 2);
    const double tol = 1e-10;
    VertexControl z;
    z.breaks = {0.0, 2 * pi / 3, 4 * pi / 3};
    z.xi = 0.02;
    VertexLabel e, d;
    e.k = {1, 1};
    d.delta = true;
    d.pair = {{1, 2}, {2, 1}};
    z.labels = {e, d};
    bool ok = true;
    std::string out;
    for (int lvl : {2, 3}) {
        GalerkinSystem sys(g, 0.01, SpectralField(g), mode_set_K(lvl), mode_set_K(1));
        SpectralField u0(g, {{{1, 1}, 0.04}, {{2, 1}, -0.02}});
        const auto st = imitation_study(sys, sys.to_dense(u0), z, 2, {3, 6, 12, 24, 48}, tol, -0.8, 10 * tol,
                                        resolve_jobs(std::thread::hardware_concurrency()));
        ok = ok && st.pass;
        double pin = 0.0;
        for (const auto& r : st.rows) pin = std::max(pin, r.max_pin_error);
        out += "K^" + std::to_string(lvl) + " slope " + fmt(st.slope) + (st.monotone ? " monotone" : " not monotone") +
               " pins " + fmt(pin) + "; ";
    }
    return {ok, out};
}

Outcome relaxed() {
    Eigen::VectorXd p1(2), p2(2), p3(2);
    p1 << 1, 0;
    p2 << 0, 1;
    p3 << -1, -1;
    std::vector<PiecewiseSignal> family;
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        Eigen::VectorXd w1(3), w2(3);
        w1 << 1.0 / 3, 1.0 / 3, 1.0 / 3;
        w2 << 0.5 * s, 0.5 * (1 - s), 0.5;
        family.push_back({{0.0, 0.4 + 0.2 * s, 1.0}, {w1, w2}});
    }
    const double eps = 0.2;
    const auto r = approximate_relaxed({p1, p2, p3}, family, eps);
    double worst = 0.0;
    for (double d : r.rx_distance) worst = std::max(worst, d);
    return {r.pass, std::to_string(r.interval_count.front()) + " intervals per member, min length " + fmt(r.min_interval) +
                        " (floor " + fmt(r.params.theta_eps) + "), rx distance " + fmt(worst) + ", weights " +
                        (r.weights_in_simplex ? "in" : "outside") + " the simplex"};
}

Outcome lie_rank() {
    std::mt19937_64 rng(5);
    const RectGeometry g(1, 2);
    bool ok = true;
    double gd = 0.0;
    std::string out;
    for (int N : {1, 2}) {
        GalerkinSystem sys(g, 0.1, SpectralField(g), mode_set_K(N), mode_set_K(1));
        LieRankOptions opt;
        opt.exact = ExactGeometry::from_sides(1, 2);
        std::size_t lo = 1000, hi = 0;
        for (int p = 0; p < 10; ++p) {
            const auto r = full_rank_check(sys, random_field(g, mode_set_K(N), rng, 1.0), opt);
            ok = ok && r.pass && r.rank == mode_set_K(N).size();
            lo = std::min(lo, r.rank);
            hi = std::max(hi, r.rank);
            gd = std::max(gd, r.gamma_delta_error);
        }
        out += "N=" + std::to_string(N) + " rank " + std::to_string(lo) + (lo == hi ? "" : ".." + std::to_string(hi)) + "; ";
    }
    ok = ok && gd < 1e-12;
    return {ok, out + "max |gamma - delta| " + fmt(gd)};
}

Outcome cascade() {
    const RectGeometry g(1, 2);
    GalerkinSystem sys(g, 0.01, SpectralField(g), mode_set_K(3), mode_set_K(1));
    SpectralField target(g);
    target.set({4, 4}, 0.3 / norm(unit_field(g, {4, 4}), NormKind::H));
    CascadeOptions opt;
    opt.T = 1.0;
    opt.tol = 1e-9;
    opt.w_cap = 1024;
    const auto r = cascade_to_K1(sys, SpectralField(g), target, 0.05, opt);
    std::string out = "M=" + std::to_string(r.M) + ", distance " + fmt(r.distance);
    bool budgets = true;
    for (const auto& s : r.steps) {
        budgets = budgets && s.within_budget;
        out += ", K^" + std::to_string(s.from_level) + " gap " + fmt(s.gap) + "/" + fmt(s.budget) + " at w " + fmt(s.w);
    }
    return {r.pass && budgets && r.M == 3, out};
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const std::function<Outcome()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d: %s  %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), s);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
        return o;
    };
    report(1, coefficient_oracle);
    report(2, exact_algebra);
    report(3, saturation_chain);
    report(4, energy_and_skew);
    Outcome cov{false, "not run"};
    const auto t0 = std::chrono::steady_clock::now();
    report(5, [&] { return deviation_and_covering(cov); });
    const double cs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d: %s  %s (with criterion 5, %.1f s)\n", 6, cov.pass ? "PASS" : "FAIL", cov.detail.c_str(), cs);
    failed += cov.pass ? 0 : 1;
    report(7, tracking);
    report(8, imitation);
    report(9, relaxed);
    report(10, lie_rank);
    report(11, cascade);
    std::printf("%d of 11 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
