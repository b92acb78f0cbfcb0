#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "galerkin/spectral.hpp"

using namespace galerkin;

TEST_CASE("kbar") {
    CHECK(kbar({1, 1}, {pi, pi}) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(kbar({2, 3}, {1, 1}) == doctest::Approx(-13 * pi * pi).epsilon(1e-15));
    CHECK(kbar({1, 2}, {2, 3}) == doctest::Approx(-25 * pi * pi / 36).epsilon(1e-15));
    CHECK(kbar({7, 1}, {0.3, 5}) < 0.0);
}

TEST_CASE("geometry and mode sets") {
    CHECK_THROWS_AS(RectGeometry(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS(normalize({{0, 1}}));
    for (int j = 1; j <= 5; ++j) CHECK(mode_set_K(j).size() == static_cast<std::size_t>((j + 2) * (j + 2) - 1));
    CHECK(!contains(mode_set_K(1), {3, 3}));
    CHECK(contains(mode_set_K(2), {1, 4}));
    const auto d = set_difference(mode_set_K(3), mode_set_K(2));
    CHECK(d.size() == 9);
    CHECK(contains(d, {4, 4}));
    CHECK(is_subset(mode_set_K(2), mode_set_K(3)));
}

TEST_CASE("velocity evaluation") {
    const RectGeometry g(1.5, 0.7);
    const auto u = unit_field(g, {1, 1});
    const auto v = eval_velocity(u, 0.0, 0.3);
    CHECK(v[0] == doctest::Approx(0.0));
    CHECK(v[1] == doctest::Approx(pi / g.a * std::sin(pi * 0.3 / g.b)));
    CHECK(eval_velocity(SpectralField(g), 0.2, 0.2)[0] == 0.0);

    SpectralField w(g, {{{1, 2}, 1.0}, {{2, 1}, -0.5}});
    const auto got = eval_velocity(w, g.a / 2, g.b / 2);
    const auto p = basis_W({1, 2}, g, g.a / 2, g.b / 2), q = basis_W({2, 1}, g, g.a / 2, g.b / 2);
    CHECK(got[0] == doctest::Approx(p[0] - 0.5 * q[0]));
    CHECK(got[1] == doctest::Approx(p[1] - 0.5 * q[1]));
    CHECK_THROWS_AS(eval_velocity(w, 2.0, 0.1), DomainError);
}

TEST_CASE("norms against quadrature") {
    const RectGeometry g(pi, pi);
    const auto u = unit_field(g, {1, 1});
    CHECK(norm(u, NormKind::H) == doctest::Approx(pi / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(norm(SpectralField(g), NormKind::DA) == 0.0);

    const RectGeometry h(1.3, 0.8);
    SpectralField f(h, {{{1, 2}, 0.4}, {{3, 1}, -0.2}, {{2, 2}, 0.7}});
    const auto rule = gauss_rectangle(h, 24);
    double l2 = 0.0, grad = 0.0;
    for (std::size_t i = 0; i < rule.x1.size(); ++i)
        for (std::size_t j = 0; j < rule.x2.size(); ++j) {
            const double wgt = rule.w1[i] * rule.w2[j];
            const auto v = eval_velocity(f, rule.x1[i], rule.x2[j]);
            l2 += wgt * (v[0] * v[0] + v[1] * v[1]);
            std::array<double, 4> d{};
            for (const auto& [k, c] : f.coeffs()) {
                const auto gk = basis_gradW(k, h, rule.x1[i], rule.x2[j]);
                for (int r = 0; r < 4; ++r) d[r] += c * gk[r];
            }
            grad += wgt * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]);
        }
    CHECK(norm(f, NormKind::H) == doctest::Approx(std::sqrt(l2)).epsilon(1e-12));
    CHECK(norm(f, NormKind::V) == doctest::Approx(std::sqrt(grad)).epsilon(1e-12));
    CHECK(parse_norm_kind("DA") == NormKind::DA);
    CHECK_THROWS(parse_norm_kind("L7"));
}

TEST_CASE("leray projection") {
    const RectGeometry g(1.2, 0.9);
    const auto w11 = recompose(unit_field(g, {1, 1}), {});
    auto [u, q] = leray_project(w11.first, w11.second, g);
    CHECK(u[{1, 1}] == doctest::Approx(1.0));
    CHECK(q.empty(1e-14));

    CoeffTable v1{{{1, 1}, -pi / g.a}}, v2{{{1, 1}, -pi / g.b}};
    auto [u2, q2] = leray_project(v1, v2, g);
    CHECK(std::abs(u2[{1, 1}]) < 1e-14);
    for (double x : {0.1, 0.5, 1.0})
        CHECK(eval_potential(q2, g, x, 0.3) ==
              doctest::Approx(std::cos(pi * x / g.a) * std::cos(pi * 0.3 / g.b)).epsilon(1e-12));

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-1, 1);
    CoeffTable r1, r2;
    for (int i = 0; i <= 3; ++i)
        for (int j = 0; j <= 3; ++j) {
            if (i >= 1) r1[{i, j}] = U(rng);
            if (j >= 1) r2[{i, j}] = U(rng);
        }
    auto [ur, qr] = leray_project(r1, r2, g);
    auto [b1, b2] = recompose(ur, qr);
    const auto rule = gauss_rectangle(g, 5);
    double worst = 0.0;
    for (double x1 : rule.x1)
        for (double x2 : rule.x2) {
            const auto a = eval_tables(r1, r2, g, x1, x2), b = eval_tables(b1, b2, g, x1, x2);
            worst = std::max({worst, std::abs(a[0] - b[0]), std::abs(a[1] - b[1])});
        }
    CHECK(worst < 1e-10);

    auto [s1, s2] = recompose(ur, {});
    auto [again, q3] = leray_project(s1, s2, g);
    for (const auto& [k, c] : ur.coeffs()) CHECK(again[k] == doctest::Approx(c).epsilon(1e-12));
    CHECK(q3.empty(1e-12));
}

TEST_CASE("json round trip") {
    const RectGeometry g(2, 1);
    SpectralField f(g, {{{1, 2}, 0.25}, {{3, 1}, -1.5}});
    const auto back = field_from_json(to_json(f));
    CHECK(back[{1, 2}] == 0.25);
    CHECK(back[{3, 1}] == -1.5);
    CHECK(back.geometry().a == 2.0);
}
