#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "galerkin/nonlinearity.hpp"

using namespace galerkin;

static SpectralField random_field(const RectGeometry& g, const ModeSet& modes, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    SpectralField u(g);
    for (const auto& k : modes) u.set(k, N(rng));
    return u;
}

TEST_CASE("wedge and vee") {
    CHECK(wedge({1, 2}, {2, 1}) == -3);
    CHECK(wedge({1, 1}, {2, 2}) == 0);
    CHECK(vee({1, 1}, {2, 3}) == 5);
    CHECK(wedge({1, 1}, {2, 3}) == 1);
}

TEST_CASE("interaction coefficients") {
    for (const auto& g : {RectGeometry(1, 1), RectGeometry(2, 0.7)}) {
        const auto c = interaction_coeffs({1, 1}, {2, 2}, g);
        CHECK(c.cpp() == 0.0);
        CHECK(c.cmm() == 0.0);
    }
    CHECK_THROWS(interaction_coeffs({2, 1}, {1, 3}, RectGeometry(1, 1)));
    CHECK_THROWS(interaction_coeffs({1, 1}, {1, 1}, RectGeometry(1, 1)));

    const double a = 1.3, b = 0.6;
    const RectGeometry g(a, b);
    const auto d = interaction_coeffs({1, 1}, {1, 3}, g).contribution(g);
    CHECK(d[{2, 2}] == doctest::Approx(2 * a * pi * pi / (b * (b * b + a * a))).epsilon(1e-13));
    CHECK(d[{2, 4}] == doctest::Approx(-a * pi * pi / (b * (b * b + 4 * a * a))).epsilon(1e-13));

    const RectGeometry sq(1, 1);
    const auto e = interaction_coeffs({1, 2}, {2, 2}, sq).contribution(sq);
    int nonzero = 0;
    for (const auto& [k, v] : e.coeffs()) {
        if (std::abs(v) < 1e-14) continue;
        ++nonzero;
        const double ref = quadrature_B(unit_field(sq, {1, 2}), unit_field(sq, {2, 2}), k) +
                           quadrature_B(unit_field(sq, {2, 2}), unit_field(sq, {1, 2}), k);
        CHECK(v == doctest::Approx(ref).epsilon(1e-9));
    }
    CHECK(nonzero == 2);
    CHECK(e[{1, 4}] == doctest::Approx(-9 * pi * pi / (2 * 17.0)).epsilon(1e-13));
    CHECK(e[{3, 4}] == doctest::Approx(3 * pi * pi / (2 * 25.0)).epsilon(1e-13));
}

TEST_CASE("quadratic and bilinear") {
    const RectGeometry g(2, 1);
    const auto K3 = mode_set_K(3);
    CHECK(quadratic(unit_field(g, {2, 3}), K3).coeffs().empty());

    SpectralField u(g, {{{1, 1}, 1.0}, {{1, 3}, 1.0}});
    const auto q = quadratic(u, K3), bl = bilinear(unit_field(g, {1, 1}), unit_field(g, {1, 3}), K3);
    const auto d = interaction_coeffs({1, 1}, {1, 3}, g).contribution(g);
    for (const auto& k : K3) {
        CHECK(q[k] == doctest::Approx(d[k]).epsilon(1e-13));
        CHECK(bl[k] == doctest::Approx(d[k]).epsilon(1e-13));
    }
    CHECK(bilinear(unit_field(g, {1, 2}), unit_field(g, {1, 2}), K3).coeffs().empty());

    const auto r = random_field(g, mode_set_K(1), 11);
    const auto qr = quadratic(r, K3);
    for (const auto& k : K3) {
        const double ref = quadrature_B(r, r, k);
        CHECK(std::abs(qr[k] - ref) <= 1e-8 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("dense operator matches the sparse one") {
    const RectGeometry g(1, std::sqrt(2.0));
    const ModeLayout L(mode_set_K(2));
    const QuadraticOperator op(g, L);
    const auto u = random_field(g, mode_set_K(2), 5), w = random_field(g, mode_set_K(2), 6);
    const Eigen::VectorXd qu = op(u.dense(L)), ref = quadratic(u, L.modes()).dense(L);
    CHECK((qu - ref).lpNorm<Eigen::Infinity>() < 1e-10);
    Eigen::VectorXd bw;
    op.apply_bilinear(u.dense(L), w.dense(L), bw);
    CHECK((bw - bilinear(u, w, L.modes()).dense(L)).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("quadrature oracle") {
    const RectGeometry g(1, 1);
    const auto e = unit_field(g, {2, 1});
    for (const auto& k : mode_set_K(2)) CHECK(std::abs(quadrature_B(e, e, k)) < 1e-12);
    const double a = 1, b = 1;
    CHECK(quadrature_B(unit_field(g, {1, 1}), unit_field(g, {1, 3}), {2, 2}) +
              quadrature_B(unit_field(g, {1, 3}), unit_field(g, {1, 1}), {2, 2}) ==
          doctest::Approx(2 * a * pi * pi / (b * (b * b + a * a))).epsilon(1e-9));

    const auto rows = oracle_sweep(RectGeometry(2, 1), 3);
    CHECK(!rows.empty());
    for (const auto& r : rows) CHECK(r.pass);
}

TEST_CASE("skew symmetry") {
    const RectGeometry g(1.7, 1.0);
    const auto u = random_field(g, mode_set_K(2), 1), v = random_field(g, mode_set_K(2), 2);
    CHECK(std::abs(trilinear_b(u, v, v)) < 1e-10);
    CHECK(std::abs(h_inner(quadratic(u, mode_set_K(4)), u)) < 1e-10);
}
