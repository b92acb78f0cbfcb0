#include "galerkin/lie_rank.hpp"

#include <algorithm>
#include <cmath>

#include "galerkin/reports.hpp"

namespace galerkin {

SpectralField drift_field(const GalerkinSystem& sys, const SpectralField& u) {
    return sys.to_field(sys.rhs_dense(sys.to_dense(u)));
}

SpectralField first_bracket(const GalerkinSystem& sys, const SpectralField& u, const ModeIndex& i) {
    const int pos = sys.layout().find(i);
    if (pos < 0) throw std::invalid_argument("bracket direction " + i.str() + " is outside the mode set");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.dim()));
    e[pos] = 1.0;
    Eigen::VectorXd out;
    sys.quadratic_op().apply_bilinear(sys.to_dense(u), e, out);
    out[pos] += sys.linear_rates()[pos];
    return sys.to_field(out);
}

SpectralField second_bracket(const GalerkinSystem& sys, const ModeIndex& i, const ModeIndex& j) {
    const SpectralField zero(sys.geometry());
    return first_bracket(sys, unit_field(sys.geometry(), j), i) - first_bracket(sys, zero, i);
}

std::vector<std::vector<ModePair>> bracket_schedule(int N, bool square_mode) {
    std::vector<std::vector<ModePair>> gens;
    for (int j = 1; j < N; ++j) {
        if (j == 1 && square_mode) {
            gens.push_back(selection_S(1, true));
            gens.back().resize(gens.back().size() - square_repair_pairs().size());
            gens.push_back(square_repair_pairs());
        } else {
            gens.push_back(selection_S(j, square_mode));
        }
    }
    return gens;
}

namespace {

Eigen::VectorXd projected(const GalerkinSystem& sys, const SpectralField& f) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.dim()));
    for (const auto& [k, v] : f.coeffs()) {
        const int pos = sys.layout().find(k);
        if (pos >= 0) out[pos] = v;
    }
    return out;
}

int level_of(const ModeSet& ms) {
    for (int n = 1; n <= 64; ++n) {
        const auto k = mode_set_K(n);
        if (k.size() > ms.size()) break;
        if (k == ms) return n;
    }
    return -1;
}

std::size_t float_rank(const std::vector<Eigen::VectorXd>& rows, std::size_t dim) {
    if (rows.empty()) return 0;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(1e-10);
    return static_cast<std::size_t>(qr.rank());
}

}  // namespace

LieRankReport full_rank_check(const GalerkinSystem& sys, const SpectralField& u, const LieRankOptions& opt) {
    LieRankReport rep;
    rep.N = level_of(sys.mode_set());
    if (rep.N < 1) throw std::invalid_argument("rank check needs a mode set of the form K^N");
    if (sys.controlled_set() != mode_set_K(1)) throw std::invalid_argument("rank check needs controlled set K^1");
    rep.point_hash = sha1_hex(to_json(u).dump()).substr(0, 16);
    rep.kappa = sys.dim();
    rep.exact = opt.exact.has_value();
    const auto& g = sys.geometry();
    rep.square_mode = opt.square_repair &&
                      (opt.exact ? opt.exact->is_square() : std::abs(g.a - g.b) <= 1e-14 * std::max(g.a, g.b));
    auto schedule = bracket_schedule(rep.N, rep.square_mode);
    const int gens = opt.max_generations < 0 ? static_cast<int>(schedule.size())
                                              : std::min<int>(opt.max_generations, static_cast<int>(schedule.size()));
    const auto& layout = sys.layout();
    const std::size_t dim = sys.dim();

    std::vector<Eigen::VectorXd> rows, affine;
    RationalMatrix qrows;
    auto unit_row = [&](const ModeIndex& k) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        r[layout.find(k)] = 1.0;
        return r;
    };
    auto unit_qrow = [&](const ModeIndex& k) {
        std::vector<Rational> r(dim, Rational(0));
        r[static_cast<std::size_t>(layout.find(k))] = 1;
        return r;
    };
    for (const auto& k : sys.controlled_set()) {
        rows.push_back(unit_row(k));
        if (rep.exact) qrows.push_back(unit_qrow(k));
        affine.push_back(sys.to_dense(first_bracket(sys, u, k)));
    }
    auto current_rank = [&]() { return rep.exact ? bareiss_rank(qrows).rank : float_rank(rows, dim); };
    auto spanned = [&](std::size_t base) {
        ModeSet out;
        for (const auto& k : sys.mode_set()) {
            std::size_t r;
            if (rep.exact) {
                auto m = qrows;
                m.push_back(unit_qrow(k));
                r = bareiss_rank(m).rank;
            } else {
                auto m = rows;
                m.push_back(unit_row(k));
                r = float_rank(m, dim);
            }
            if (r == base) out.push_back(k);
        }
        return out;
    };
    auto informative = [&]() {
        auto m = rows;
        m.insert(m.end(), affine.begin(), affine.end());
        return float_rank(m, dim);
    };

    rep.rank = current_rank();
    ModeSet span_modes = spanned(rep.rank);
    BracketGeneration g0;
    g0.rank = rep.rank;
    g0.informative_rank = informative();
    g0.spanned = span_modes;
    rep.generations.push_back(g0);

    for (int gi = 0; gi < gens && rep.rank < rep.kappa; ++gi) {
        BracketGeneration gen;
        gen.index = gi + 1;
        for (const auto& p : schedule[static_cast<std::size_t>(gi)]) {
            if (!contains(span_modes, p.first) || !contains(span_modes, p.second)) {
                gen.skipped.push_back(p);
                continue;
            }
            const Eigen::VectorXd gamma = sys.to_dense(second_bracket(sys, p.first, p.second));
            if (rep.exact) {
                const auto d = delta_vector(p.first, p.second, *opt.exact);
                std::vector<Rational> r(dim, Rational(0));
                for (const auto& [k, q] : d.entries) {
                    const int pos = layout.find(k);
                    if (pos >= 0) r[static_cast<std::size_t>(pos)] = q;
                }
                qrows.push_back(std::move(r));
                const Eigen::VectorXd dd = projected(sys, d.to_field(g));
                gen.gamma_delta_error = std::max(gen.gamma_delta_error, (gamma - dd).lpNorm<Eigen::Infinity>());
            } else {
                const RectGeometry& fg = g;
                const auto ic = interaction_coeffs(p.first, p.second, fg);
                const Eigen::VectorXd dd = projected(sys, ic.contribution(fg));
                gen.gamma_delta_error = std::max(gen.gamma_delta_error, (gamma - dd).lpNorm<Eigen::Infinity>());
            }
            rows.push_back(gamma);
            gen.pairs.push_back(p);
        }
        rep.rank = current_rank();
        span_modes = spanned(rep.rank);
        gen.rank = rep.rank;
        gen.informative_rank = informative();
        gen.spanned = span_modes;
        rep.gamma_delta_error = std::max(rep.gamma_delta_error, gen.gamma_delta_error);
        rep.generations.push_back(std::move(gen));
    }
    rep.informative_rank = rep.generations.back().informative_rank;
    rep.pass = rep.rank == rep.kappa;
    return rep;
}

nlohmann::json to_json(const LieRankReport& r) {
    nlohmann::json j;
    j["N"] = r.N;
    j["point_hash"] = r.point_hash;
    j["rank"] = r.rank;
    j["kappa_N"] = r.kappa;
    j["informative_rank"] = r.informative_rank;
    j["exact"] = r.exact;
    j["square_mode"] = r.square_mode;
    j["gamma_delta_max_error"] = r.gamma_delta_error;
    nlohmann::json gs = nlohmann::json::array();
    for (const auto& g : r.generations) {
        nlohmann::json x{{"index", g.index}, {"rank", g.rank}, {"informative_rank", g.informative_rank},
                         {"spanned_modes", g.spanned.size()}};
        nlohmann::json ps = nlohmann::json::array(), sk = nlohmann::json::array();
        for (const auto& p : g.pairs) ps.push_back(pair_str(p));
        for (const auto& p : g.skipped) sk.push_back(pair_str(p));
        x["brackets"] = ps;
        if (!sk.empty()) x["skipped"] = sk;
        gs.push_back(x);
    }
    j["generations"] = gs;
    j["verdict"] = r.pass ? "pass" : "fail";
    return j;
}

}  // namespace galerkin
