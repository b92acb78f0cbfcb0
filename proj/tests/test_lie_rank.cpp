#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "galerkin/lie_rank.hpp"

using namespace galerkin;

static SpectralField random_field(const RectGeometry& g, const ModeSet& modes, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> N(0.0, 0.5);
    SpectralField u(g);
    for (const auto& k : modes) u.set(k, N(rng));
    return u;
}

TEST_CASE("drift and first brackets") {
    const RectGeometry g(1, 2);
    GalerkinSystem sys(g, 0.4, SpectralField(g), mode_set_K(2), mode_set_K(1));
    const auto u = random_field(g, mode_set_K(2), 3);
    const auto d = drift_field(sys, u), r = sys.rhs(u, Eigen::VectorXd::Zero(8));
    for (const auto& k : sys.mode_set()) CHECK(d[k] == doctest::Approx(r[k]));

    const auto b0 = first_bracket(sys, SpectralField(g), {1, 1});
    CHECK(b0[{1, 1}] == doctest::Approx(0.4 * kbar({1, 1}, g)));
    CHECK(b0.support().size() == 1);

    const auto b1 = first_bracket(sys, unit_field(g, {1, 3}), {1, 1});
    const auto delta = delta_vector({1, 1}, {1, 3}, ExactGeometry::from_sides(1, 2)).to_field(g);
    for (const auto& k : sys.mode_set()) {
        const double expect = delta[k] + (k == ModeIndex{1, 1} ? 0.4 * kbar(k, g) : 0.0);
        CHECK(b1[k] == doctest::Approx(expect).epsilon(1e-12));
    }

    const double h = 1e-5;
    const auto col = first_bracket(sys, u, {2, 1});
    auto up = u, dn = u;
    up.add({2, 1}, h);
    dn.add({2, 1}, -h);
    const auto fd = (1.0 / (2 * h)) * (drift_field(sys, up) - drift_field(sys, dn));
    for (const auto& k : sys.mode_set()) CHECK(std::abs(col[k] - fd[k]) < 1e-6);

    const auto gam = second_bracket(sys, {1, 2}, {2, 1});
    const auto dl = delta_vector({1, 2}, {2, 1}, ExactGeometry::from_sides(1, 2)).to_field(g);
    for (const auto& k : sys.mode_set()) CHECK(gam[k] == doctest::Approx(dl[k]).epsilon(1e-12));
}

TEST_CASE("rank reaches the mode count") {
    const RectGeometry g(1, 2);
    for (int N : {1, 2, 3}) {
        GalerkinSystem sys(g, 0.1, SpectralField(g), mode_set_K(N), mode_set_K(1));
        LieRankOptions opt;
        opt.exact = ExactGeometry::from_sides(1, 2);
        const auto r = full_rank_check(sys, random_field(g, mode_set_K(N), 10 + N), opt);
        CHECK(r.pass);
        CHECK(r.rank == mode_set_K(N).size());
        CHECK(r.gamma_delta_error < 1e-12);
    }
}

TEST_CASE("square geometry needs the repair generations") {
    const RectGeometry g(1, 1);
    GalerkinSystem sys(g, 0.1, SpectralField(g), mode_set_K(2), mode_set_K(1));
    const auto u = random_field(g, mode_set_K(2), 4);
    LieRankOptions opt;
    opt.exact = ExactGeometry(1, 1);
    const auto with = full_rank_check(sys, u, opt);
    CHECK(with.rank == 15);
    opt.square_repair = false;
    const auto without = full_rank_check(sys, u, opt);
    CHECK(without.rank == 14);
    CHECK(!without.pass);

    GalerkinSystem s3(g, 0.1, SpectralField(g), mode_set_K(3), mode_set_K(1));
    LieRankOptions o3;
    o3.exact = ExactGeometry(1, 1);
    CHECK(full_rank_check(s3, random_field(g, mode_set_K(3), 6), o3).rank == 24);
}

TEST_CASE("irrational geometry uses the floating span") {
    const RectGeometry g(1, 1.41421356);
    GalerkinSystem sys(g, 0.1, SpectralField(g), mode_set_K(2), mode_set_K(1));
    const auto r = full_rank_check(sys, random_field(g, mode_set_K(2), 1));
    CHECK(!r.exact);
    CHECK(r.rank == 15);
    CHECK_THROWS(full_rank_check(sys.with_controlled(mode_set_K(2)), SpectralField(g)));
}
