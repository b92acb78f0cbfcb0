#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "galerkin/dynamics.hpp"

using namespace galerkin;

static SpectralField random_field(const RectGeometry& g, const ModeSet& modes, unsigned seed, double s = 1.0) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> N(0.0, s);
    SpectralField u(g);
    for (const auto& k : modes) u.set(k, N(rng));
    return u;
}

TEST_CASE("right-hand side") {
    const RectGeometry g(1, 2);
    GalerkinSystem sys(g, 0.3, SpectralField(g), mode_set_K(2), mode_set_K(1));
    CHECK(sys.rhs_dense(Eigen::VectorXd::Zero(sys.dim())).norm() == 0.0);
    const auto e = unit_field(g, {2, 3});
    const auto r = sys.rhs(e, Eigen::VectorXd::Zero(sys.control_dim()));
    CHECK(r[{2, 3}] == doctest::Approx(0.3 * kbar({2, 3}, g)));
    CHECK(r.support().size() == 1);
    CHECK_THROWS(GalerkinSystem(g, 0.0, SpectralField(g), mode_set_K(1), mode_set_K(1)));
    CHECK_THROWS(GalerkinSystem(g, 1.0, SpectralField(g), mode_set_K(1), mode_set_K(2)));
}

TEST_CASE("flow derivative at t = 0") {
    const RectGeometry g(1, 2);
    GalerkinSystem sys(g, 0.1, random_field(g, {{1, 1}, {2, 1}}, 4, 0.3), mode_set_K(2), mode_set_K(1));
    const auto u0 = random_field(g, mode_set_K(1), 9, 0.5);
    const auto f = sys.rhs_dense(sys.to_dense(u0));
    const auto v = ControlSignal::zero(sys.control_dim(), 1.0);
    auto step = [&](double h) -> Eigen::VectorXd {
        return (integrate(sys, u0, v, h, 1e-13).end_dense() - sys.to_dense(u0)) / h;
    };
    const Eigen::VectorXd rich = 2.0 * step(1e-4) - step(2e-4);
    CHECK((rich - f).lpNorm<Eigen::Infinity>() < 1e-6 * std::max(1.0, f.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("linear decay") {
    const RectGeometry g(1, 1);
    GalerkinSystem sys(g, 2.0, SpectralField(g), mode_set_K(2), mode_set_K(1));
    const auto u0 = random_field(g, mode_set_K(2), 2, 1e-7);
    const double T = 0.05;
    const auto tr = integrate(sys, u0, ControlSignal::zero(sys.control_dim(), T), T, 1e-10);
    double kmax = -1e300;
    for (const auto& k : u0.support()) kmax = std::max(kmax, kbar(k, g));
    CHECK(norm(tr.end_state(), NormKind::H) <= norm(u0, NormKind::H) * std::exp(2.0 * kmax * T) * (1 + 1e-10));
}

TEST_CASE("decay is monotone and the energy bound holds") {
    const RectGeometry g(1, 2);
    GalerkinSystem sys(g, 0.05, SpectralField(g), mode_set_K(2), mode_set_K(1));
    const auto u0 = random_field(g, mode_set_K(2), 8);
    const auto tr = integrate(sys, u0, ControlSignal::zero(sys.control_dim(), 2.0), 2.0, 1e-9);
    double prev = 1e300;
    for (double t : tr.sample_times()) {
        const double h = norm(tr.state_at(t), NormKind::H);
        CHECK(h <= prev * (1 + 1e-9));
        prev = h;
    }

    const auto forced = sys.with_forcing(random_field(g, {{1, 1}, {1, 2}}, 3));
    ControlSignal v = ControlSignal::piecewise({0.0, 0.4, 1.0}, {Eigen::VectorXd::Constant(8, 0.5), Eigen::VectorXd::Constant(8, -1.0)});
    const auto tf = integrate(forced, u0, v, 1.0, 1e-9);
    const auto times = tf.sample_times();
    const auto bound = energy_bound(forced, u0, v, times);
    for (std::size_t i = 0; i < times.size(); ++i) CHECK(norm(tf.state_at(times[i]), NormKind::H) <= bound[i] * (1 + 1e-9));
}

TEST_CASE("control knots and dense output") {
    const RectGeometry g(1, 1);
    GalerkinSystem sys(g, 0.5, SpectralField(g), mode_set_K(1), mode_set_K(1));
    Eigen::VectorXd on = Eigen::VectorXd::Zero(8);
    on[0] = 1.0;
    ControlSignal v = ControlSignal::piecewise({0.0, 0.3, 1.0}, {on, Eigen::VectorXd::Zero(8)});
    const auto tr = integrate(sys, SpectralField(g), v, 1.0, 1e-10);
    const auto ts = tr.sample_times();
    CHECK(std::find_if(ts.begin(), ts.end(), [](double t) { return std::abs(t - 0.3) < 1e-15; }) != ts.end());
    // a single mode with constant forcing: u = (1 - exp(lambda t)) / (-lambda)
    const double lam = 0.5 * kbar({1, 1}, g);
    const double exact = (std::exp(lam * 0.2) - 1.0) / lam;
    CHECK(tr.state_at(0.2)[{1, 1}] == doctest::Approx(exact).epsilon(1e-8));
    CHECK_THROWS_AS(ControlSignal::piecewise({0.0, 0.0}, {Eigen::VectorXd::Zero(8)}), std::invalid_argument);
}

TEST_CASE("data continuity probe") {
    const RectGeometry g(1, 2);
    GalerkinSystem sys(g, 0.2, SpectralField(g), mode_set_K(1), mode_set_K(1));
    const auto u0 = random_field(g, mode_set_K(1), 1, 0.3);
    const auto rows = data_continuity_probe(sys, u0, ControlSignal::zero(8, 0.5), 0.5, {0.0, 1e-4, 5e-5});
    CHECK(rows[0].dev_u0 == 0.0);
    CHECK(rows[0].dev_forcing == 0.0);
    const double r = rows[2].dev_u0 / rows[1].dev_u0;
    CHECK(r > 0.3);
    CHECK(r < 0.7);
}

TEST_CASE("stiffness diagnostics") {
    const RectGeometry g(1, 1);
    GalerkinSystem sys(g, 1e-3, SpectralField(g), mode_set_K(1), mode_set_K(1));
    IntegratorOptions opt;
    opt.max_steps = 5;
    const auto u0 = random_field(g, mode_set_K(1), 1, 50.0);
    CHECK_THROWS_AS(integrate(sys, u0, ControlSignal::zero(8, 1.0), 1.0, 1e-12, opt), StiffnessError);
}
