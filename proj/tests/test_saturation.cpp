#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "galerkin/nonlinearity.hpp"
#include "galerkin/saturation.hpp"

using namespace galerkin;

static Rational q(const char* s) { return parse_rational(s); }

TEST_CASE("rationals and Bareiss") {
    CHECK(parse_rational("1.25") == Rational(5, 4));
    CHECK(parse_rational("-7/4") == Rational(-7, 4));
    CHECK_THROWS(parse_rational("x"));
    RationalMatrix m{{q("1"), q("2"), q("3")}, {q("2"), q("4"), q("6")}, {q("1/2"), q("0"), q("1")}};
    const auto r = bareiss_rank(m);
    CHECK(r.rank == 2);
    CHECK(r.dependent_rows.size() == 1);
    CHECK(bareiss_determinant(m) == 0);
    RationalMatrix h{{q("1"), q("1/2")}, {q("1/2"), q("1/3")}};
    CHECK(bareiss_determinant(h) == Rational(1, 12));
}

TEST_CASE("delta vectors, exact") {
    // a = 1, b = 2: entries in units of pi^2/(4ab)
    const auto g = ExactGeometry::from_sides(1, 2);
    const Rational a2 = 1, b2 = 4;
    const auto d = delta_vector({1, 2}, {2, 1}, g);
    CHECK(d.entry({1, 1}) == 9 * (b2 - a2) / (a2 + b2));
    CHECK(d.entry({1, 3}) == 15 * (a2 - b2) / (9 * a2 + b2));
    CHECK(d.entry({3, 1}) == 15 * (a2 - b2) / (a2 + 9 * b2));
    CHECK(d.entry({3, 3}) == (b2 - a2) / (a2 + b2));

    const auto sq = delta_vector({1, 2}, {2, 1}, ExactGeometry(1, 1));
    for (const auto& [k, v] : sq.entries) CHECK(v == 0);

    const auto e = delta_vector({1, 1}, {3, 1}, g);
    CHECK(e.entry({2, 2}) == -8 * b2 / (a2 + b2));
    CHECK(e.entry({4, 2}) == 4 * b2 / (a2 + 4 * b2));

    const RectGeometry rg(1, 2);
    const auto f = delta_vector({1, 1}, {1, 3}, g).to_field(rg);
    const auto c = interaction_coeffs({1, 1}, {1, 3}, rg).contribution(rg);
    for (const auto& k : mode_set_K(3)) CHECK(f[k] == doctest::Approx(c[k]).epsilon(1e-13));
}

TEST_CASE("selections") {
    CHECK(selection_S(1).size() == 7);
    CHECK(selection_S(2).size() == 9);
    CHECK(selection_S(3).size() == 11);
    const auto s = selection_S(1, true);
    CHECK(s.size() == 9);
    CHECK(std::find(s.begin(), s.end(), ModePair{{1, 2}, {2, 1}}) == s.end());
    CHECK(square_repair_pairs().size() == 3);
}

TEST_CASE("verify_step") {
    const auto g = ExactGeometry::from_sides(1, 2);
    const auto c1 = verify_step(1, g, false);
    CHECK(c1.verdict);
    CHECK(c1.rank == 7);
    CHECK(c1.combined_rank == 15);
    for (int j = 2; j <= 4; ++j) CHECK(verify_step(j, g, false).verdict);

    const ExactGeometry sq(1, 1);
    const auto off = verify_step(1, sq, false);
    CHECK(!off.verdict);
    CHECK(!off.failure.empty());
    const auto on = verify_step(1, sq, true);
    CHECK(on.verdict);
    CHECK(on.repair_rank == 3);
    bool found = false;
    for (const auto& w : on.witnesses)
        if (w.rows.size() == 3 && w.det_pi_units == "-45/442") found = true;
    CHECK(found);
}

TEST_CASE("chains") {
    const auto g = ExactGeometry::from_sides(1, 2);
    const auto c = build_chain({{5, 5}}, g);
    CHECK(c.pass);
    CHECK(c.final_level == 4);
    CHECK(c.steps.size() == 3);
    CHECK(build_chain({{1, 2}}, g).steps.empty());
    const auto s = build_chain({{4, 4}}, ExactGeometry(1, 1));
    CHECK(s.pass);
    CHECK(s.steps.front().square_mode);
    CHECK_THROWS_AS(build_chain({{4, 4}}, ExactGeometry(1, 1), false), ChainFailure);
    for (const auto& w : c.witnesses) {
        CHECK(w.residual_plus < 1e-10);
        CHECK(w.residual_minus < 1e-10);
    }
}
