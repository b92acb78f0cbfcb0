#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "galerkin/control.hpp"

using namespace galerkin;

static Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

TEST_CASE("endpoint maps") {
    const RectGeometry g(1, 2);
    GalerkinSystem sys(g, 1.0, SpectralField(g), mode_set_K(2), mode_set_K(1));
    EndpointExperiment exp(sys, mode_set_K(1), SpectralField(g), 0.1, 2.0, 1e-3);
    CHECK(endpoint_map(exp, Eigen::VectorXd::Zero(8)).norm() == 0.0);
    Eigen::VectorXd p = Eigen::VectorXd::Constant(8, 0.01);
    double prev = 1e300;
    for (double T : {1e-2, 1e-3, 1e-4}) {
        const double dev = l1_norm(endpoint_map_at(exp, p, T) - reference_map(exp, p));
        CHECK(dev < prev);
        prev = dev;
    }

    SpectralField u0(g, {{{1, 1}, 0.2}, {{2, 1}, -0.1}});
    EndpointExperiment e2(sys, mode_set_K(1), u0, 0.1, 2.0, 1e-4);
    const auto t = solve_endpoint(e2, e2.center(), CoveringOptions{});
    CHECK(t.pass);
    CHECK(l1_norm(t.p) < 1e-3);
}

TEST_CASE("tracking") {
    const RectGeometry g(1, 2);
    GalerkinSystem sys(g, 0.5, SpectralField(g), mode_set_K(2), mode_set_K(1));
    const ModeSet J = mode_set_K(1);
    const auto Kc = set_difference(mode_set_K(2), J);

    // equilibrium at the origin needs no control
    const auto zero = ControlSignal::smooth(8, [](double) { return Eigen::VectorXd(Eigen::VectorXd::Zero(8)); },
                                            [](double) { return Eigen::VectorXd(Eigen::VectorXd::Zero(8)); }, {});
    const auto tr0 = tracking_control(sys, J, zero, Eigen::VectorXd::Zero(Kc.size()), 0.0, 0.5);
    for (double t : {0.0, 0.2, 0.5}) CHECK(tr0.v.value(t).norm() < 1e-14);

    const double tol = 1e-10;
    const auto q = random_smooth_target(8, 0.5, 17);
    const auto tr = tracking_control(sys, J, q, Eigen::VectorXd::Zero(Kc.size()), 0.0, 0.5, tol);
    const auto rc = replay_tracking(sys, tr, q, Eigen::VectorXd::Zero(Kc.size()), 0.0, 0.5, tol);
    CHECK(rc.max_error <= 10 * tol);
    CHECK_THROWS(tracking_control(sys, J, ControlSignal::zero(3, 1.0), Eigen::VectorXd::Zero(Kc.size()), 0, 1));
}

TEST_CASE("oscillator profile") {
    const std::vector<double> br{0.0, 0.7, 1.1, 2.0};
    for (double w : {3.0, 10.0, 41.0}) {
        const auto p = make_phi_w(br, w);
        for (double a : br) CHECK(std::abs(p.value(a)) < 1e-15);
        CHECK(p.ramp_measure() <= 2.0 * 2.0 / w + 1e-14);
        CHECK(p.verify().pass);
    }
    const double T = 1.2;
    CHECK(make_phi_w({0.0, T}, 3.0).value(T / 2) == doctest::Approx(std::sin(1.5 * T)));
    CHECK_THROWS(make_phi_w({0.0, 1.0}, 2.5));
}

TEST_CASE("relaxation metric") {
    PiecewiseSignal c{{0.0, 2.0}, {vec({0.5, -1.5})}};
    CHECK(rx_norm(c) == doctest::Approx(2.0 * 2.0));
    PiecewiseSignal s{{0.0, 0.5, 1.0}, {vec({1.0}), vec({-1.0})}};
    CHECK(rx_norm(s) == doctest::Approx(0.5));
    CHECK(delta_metric(s, s) == 0.0);

    std::mt19937 rng(2);
    std::uniform_real_distribution<double> U(-1, 1);
    auto random_signal = [&](int n) {
        PiecewiseSignal g;
        g.breaks.push_back(0.0);
        for (int i = 0; i < n; ++i) {
            g.breaks.push_back(g.breaks.back() + 0.1 + std::abs(U(rng)));
            g.values.push_back(vec({U(rng), U(rng)}));
        }
        g.breaks.back() = 3.0;
        return g;
    };
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_signal(4), b = random_signal(3), z = random_signal(5);
        const auto ab = subtract(a, b), bz = subtract(b, z), az = subtract(a, z);
        CHECK(rx_norm(az) <= rx_norm(ab) + rx_norm(bz) + 1e-12);
        PiecewiseSignal twice = a;
        for (auto& v : twice.values) v *= -2.5;
        CHECK(rx_norm(twice) == doctest::Approx(2.5 * rx_norm(a)));
    }
}

TEST_CASE("relaxed approximation") {
    const std::vector<Eigen::VectorXd> verts{vec({1.0, 0.0}), vec({0.0, 1.0})};
    const auto at_vertex = approximate_relaxed(verts, {PiecewiseSignal{{0.0, 1.0}, {vec({1.0, 0.0})}}}, 0.1);
    CHECK(canonical(at_vertex.outputs[0]).intervals() == 1);

    const auto bary = approximate_relaxed(verts, {PiecewiseSignal{{0.0, 1.0}, {vec({0.5, 0.5})}}}, 0.1);
    CHECK(bary.pass);
    CHECK(bary.rx_distance[0] < 0.1);
    const auto& o = bary.outputs[0];
    for (std::size_t i = 1; i < o.intervals(); ++i)
        CHECK(o.breaks[i + 1] - o.breaks[i] == doctest::Approx(o.breaks[1] - o.breaks[0]));

    const auto w = p_zero_theta(vec({0.9, 0.1, 0.0}), 4);
    Rational mass = 0;
    for (const auto& x : w) mass += x;
    CHECK(mass == 1);
    for (const auto& x : w) CHECK(x >= Rational(1, 12));
    CHECK_THROWS_AS(approximate_relaxed(verts, {PiecewiseSignal{{0.0, 1.0}, {vec({0.5, 0.5})}}}, 1e-9, 8),
                    CapacityError);
}

TEST_CASE("gauge") {
    const std::vector<Eigen::VectorXd> gens{vec({1.0, 0.0}), vec({0.0, 2.0})};
    const auto r = compute_xi({vec({0.5, -1.0}), vec({0.0, 0.0})}, gens);
    CHECK(r.xi == doctest::Approx(1.0));
    CHECK(r.lambda[1].sum() == doctest::Approx(0.0));
}

TEST_CASE("imitation with unit vertices only") {
    const RectGeometry g(1, 2);
    GalerkinSystem sys(g, 0.1, SpectralField(g), mode_set_K(3), mode_set_K(1));
    VertexControl z;
    z.breaks = {0.0, 0.5, 1.0};
    z.xi = 0.1;
    VertexLabel a, b;
    a.k = {1, 1};
    b.k = {2, 3};
    b.sign = -1;
    z.labels = {a, b};
    const auto im = imitate(sys, Eigen::VectorXd::Zero(sys.dim()), z, 3, 12.0, 1e-10);
    CHECK(im.gap < 1e-8);
    CHECK(im.max_pin_error < 1e-8);
}

TEST_CASE("cascade trivial cases") {
    const RectGeometry g(1, 2);
    GalerkinSystem sys(g, 0.1, SpectralField(g), mode_set_K(2), mode_set_K(1));
    SpectralField u0(g, {{{1, 1}, 0.1}});
    CascadeOptions opt;
    opt.T = 0.5;
    const auto hold = cascade_to_K1(sys, u0, u0, 0.05, opt);
    CHECK(hold.M == 1);
    CHECK(hold.steps.empty());
    CHECK(hold.pass);
    const auto low = cascade_to_K1(sys, u0, SpectralField(g, {{{2, 1}, 0.2}}), 0.05, opt);
    CHECK(low.steps.empty());
    CHECK(low.pass);
    CHECK(low.covering_residual < 1e-6);
    CHECK_THROWS(cascade_to_K1(sys, u0, SpectralField(g, {{{4, 4}, 0.2}}), 0.05, opt));
}
