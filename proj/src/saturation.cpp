#include "galerkin/saturation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>

#include "galerkin/nonlinearity.hpp"

namespace galerkin {

std::string pair_str(const ModePair& p) { return "(" + p.first.str() + "," + p.second.str() + ")"; }

SpectralField DeltaVector::to_field(const RectGeometry& g) const {
    const double f = pi * pi / (4.0 * g.a * g.b);
    SpectralField out(g);
    for (const auto& [k, q] : entries) out.set(k, f * q.get_d());
    return out;
}

Rational DeltaVector::entry(const ModeIndex& k) const {
    auto it = entries.find(k);
    return it == entries.end() ? Rational(0) : it->second;
}

DeltaVector delta_vector(const ModeIndex& m, const ModeIndex& n, const ExactGeometry& g) {
    if (!(m < n)) throw std::invalid_argument("delta_vector needs m < n, got " + m.str() + " and " + n.str());
    const Rational ia2 = 1 / g.a2, ib2 = 1 / g.b2;
    DeltaVector d{m, n, {}};
    for (const auto& t : interaction_ratios<Rational>(m, n, ia2, ib2)) {
        Rational v = t.value;
        v.canonicalize();
        d.entries[t.target] += v;
    }
    std::erase_if(d.entries, [](const auto& kv) { return sgn(kv.second) == 0; });
    return d;
}

static ModePair mp(int a, int b, int c, int d) { return {ModeIndex{a, b}, ModeIndex{c, d}}; }

std::vector<ModePair> square_repair_pairs() { return {mp(1, 1, 2, 4), mp(1, 2, 2, 3), mp(1, 4, 2, 1)}; }
ModeSet square_repair_targets() { return {{1, 5}, {3, 3}, {3, 5}}; }

static std::vector<ModePair> pair_family(int j, bool square_mode) {
    std::vector<ModePair> s;
    if (j == 1) {
        s = {mp(1, 2, 2, 1), mp(1, 1, 2, 3), mp(1, 2, 2, 2), mp(1, 1, 3, 2),
             mp(2, 1, 2, 2), mp(1, 1, 1, 3), mp(1, 1, 3, 1)};
        if (square_mode) {
            s.erase(s.begin());
            for (const auto& r : square_repair_pairs()) s.push_back(r);
        }
        return s;
    }
    if (j % 2 == 1) {
        const int p = (j + 1) / 2;
        s.push_back(mp(1, 2, 2 * p, 2 * p - 1));
        for (int z = 1; z <= p; ++z) s.push_back(mp(1, 1, 2 * z, 2 * p + 1));
        s.push_back(mp(1, p + 1, 2, p + 1));
        for (int z = 1; z <= p; ++z) s.push_back(mp(1, 1, 2 * p + 1, 2 * z));
        s.push_back(mp(p + 1, 1, p + 1, 2));
        for (int q = 1; q <= p; ++q) s.push_back(mp(q, 1, q, 2 * p + 1));
        for (int q = 1; q <= p; ++q) s.push_back(mp(1, q, 2 * p + 1, q));
    } else {
        const int p = (j + 2) / 2;
        s.push_back(mp(1, 2 * p - 1, 2 * p - 1, 1));
        for (int z = 2; z <= p; ++z) s.push_back(mp(1, 1, 2 * z - 1, 2 * p));
        s.push_back(mp(1, p, 3, p + 1));
        for (int z = 2; z <= p; ++z) s.push_back(mp(1, 1, 2 * p, 2 * z - 1));
        s.push_back(mp(p, 1, p + 1, 3));
        for (int q = 1; q <= p - 1; ++q) s.push_back(mp(1, 1, 2 * q, 2 * p));
        s.push_back(mp(1, p, 2, p + 1));
        for (int q = 1; q <= p - 1; ++q) s.push_back(mp(1, 1, 2 * p, 2 * q));
        s.push_back(mp(p, 1, p + 1, 2));
    }
    return s;
}

static RationalMatrix project_rows(const std::vector<DeltaVector>& ds, const ModeSet& cols);

// At a = b the deltas of transposed pairs (m, m^T) vanish. Each such pair is replaced by the first pair
// of K^j, in lexicographic order, whose delta stays inside K^{j+1} and raises the projected rank.
// Square deltas in units of pi^2/(4ab) do not depend on the side, so the result depends on j only.
static const SquareSubstitution& square_substitution(int j) {
    static std::mutex mu;
    static std::map<int, SquareSubstitution> cache;
    std::lock_guard<std::mutex> lk(mu);
    if (auto it = cache.find(j); it != cache.end()) return it->second;
    const ExactGeometry g(1, 1);
    const ModeSet prev = mode_set_K(j), next = mode_set_K(j + 1), fresh = set_difference(next, prev);
    SquareSubstitution out;
    std::vector<DeltaVector> kept;
    for (const auto& p : pair_family(j, false)) {
        auto d = delta_vector(p.first, p.second, g);
        const bool vanishes = std::none_of(fresh.begin(), fresh.end(), [&](const ModeIndex& k) { return sgn(d.entry(k)) != 0; });
        if (vanishes) {
            out.replaced.push_back(p);
        } else {
            out.pairs.push_back(p);
            kept.push_back(std::move(d));
        }
    }
    std::size_t rank = bareiss_rank(project_rows(kept, fresh)).rank;
    for (std::size_t a = 0; a < prev.size() && rank < fresh.size(); ++a)
        for (std::size_t b = a + 1; b < prev.size() && rank < fresh.size(); ++b) {
            const ModePair p{prev[a], prev[b]};
            if (std::find(out.pairs.begin(), out.pairs.end(), p) != out.pairs.end()) continue;
            auto d = delta_vector(p.first, p.second, g);
            if (d.entries.empty() || std::any_of(d.entries.begin(), d.entries.end(), [&](const auto& kv) { return !contains(next, kv.first); }))
                continue;
            kept.push_back(d);
            const std::size_t r = bareiss_rank(project_rows(kept, fresh)).rank;
            if (r > rank) {
                rank = r;
                out.pairs.push_back(p);
                out.substitutes.push_back(p);
            } else {
                kept.pop_back();
            }
        }
    return cache.emplace(j, std::move(out)).first->second;
}

std::vector<ModePair> selection_S(int j, bool square_mode) {
    if (j < 1) throw std::invalid_argument("selection level must be >= 1");
    if (j >= 2 && square_mode) return square_substitution(j).pairs;
    return pair_family(j, square_mode);
}

SquareSubstitution square_substitution_for(int j) {
    if (j < 2) throw std::invalid_argument("square substitution applies from level 2");
    return square_substitution(j);
}

static RationalMatrix project_rows(const std::vector<DeltaVector>& ds, const ModeSet& cols) {
    RationalMatrix m;
    for (const auto& d : ds) {
        std::vector<Rational> row;
        for (const auto& c : cols) row.push_back(d.entry(c));
        m.push_back(std::move(row));
    }
    return m;
}

static std::string det_in_pi_units(const Rational& det, std::size_t size, const ExactGeometry& g) {
    Rational ab;
    if (!g.ab_rational(ab)) return {};
    Rational f = 1 / (4 * ab);
    Rational out = det;
    for (std::size_t i = 0; i < size; ++i) out *= f;
    out.canonicalize();
    return to_string(out);
}

// rows that only touch two columns and share them give the two-vector subchecks
static void pair_minors(const std::vector<ModePair>& pairs, const RationalMatrix& m, const ModeSet& cols,
                        const ExactGeometry& g, std::vector<DeterminantWitness>& out) {
    std::vector<std::vector<std::size_t>> support(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t c = 0; c < cols.size(); ++c)
            if (sgn(m[i][c]) != 0) support[i].push_back(c);
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t k = i + 1; k < m.size(); ++k) {
            if (support[i].size() != 2 || support[i] != support[k]) continue;
            DeterminantWitness w;
            w.label = "two-vector subcheck";
            w.rows = {pairs[i], pairs[k]};
            w.cols = {cols[support[i][0]], cols[support[i][1]]};
            w.det = bareiss_determinant(submatrix(m, {i, k}, support[i]));
            w.det_pi_units = det_in_pi_units(w.det, 2, g);
            out.push_back(std::move(w));
        }
}

SaturationStepCertificate verify_step(int j, const ExactGeometry& g, bool square_mode) {
    if (j < 1) throw std::invalid_argument("saturation level must be >= 1");
    SaturationStepCertificate c;
    c.level = j;
    c.square_mode = square_mode && j == 1;
    const ModeSet prev = mode_set_K(j), next = mode_set_K(j + 1);
    const ModeSet fresh = set_difference(next, prev);

    auto deltas_of = [&](const std::vector<ModePair>& ps) {
        std::vector<DeltaVector> ds;
        for (const auto& p : ps) ds.push_back(delta_vector(p.first, p.second, g));
        return ds;
    };

    std::vector<ModePair> main_pairs = selection_S(j, square_mode && j >= 2);
    if (square_mode && j >= 2) {
        const auto sub = square_substitution(j);
        c.replaced_pairs = sub.replaced;
        c.substitute_pairs = sub.substitutes;
    }
    if (c.square_mode) {
        main_pairs.erase(main_pairs.begin());
        c.repair_pairs = square_repair_pairs();
        c.repair_columns = square_repair_targets();
        c.columns = set_difference(fresh, ModeSet{{3, 3}});
    } else {
        c.columns = fresh;
    }
    c.pairs = main_pairs;
    for (const auto& p : c.pairs)
        if (!contains(prev, p.first) || !contains(prev, p.second))
            throw std::logic_error("selected pair " + pair_str(p) + " leaves K^" + std::to_string(j));

    const auto deltas = deltas_of(c.pairs);
    c.matrix = project_rows(deltas, c.columns);
    const auto br = bareiss_rank(c.matrix);
    c.rank = br.rank;
    c.required = c.columns.size();

    for (std::size_t i = 0; i < c.pairs.size(); ++i) {
        PairCheck pc{c.pairs[i], wedge(c.pairs[i].first, c.pairs[i].second),
                     vee(c.pairs[i].first, c.pairs[i].second), false};
        pc.reaches_new_modes = std::any_of(c.matrix[i].begin(), c.matrix[i].end(),
                                           [](const Rational& q) { return sgn(q) != 0; });
        c.checks.push_back(pc);
    }
    pair_minors(c.pairs, c.matrix, c.columns, g, c.witnesses);
    if (c.rank == c.required && c.pairs.size() == c.required) {
        DeterminantWitness w;
        w.label = "full projected determinant";
        w.rows = c.pairs;
        w.cols = c.columns;
        w.det = bareiss_determinant(c.matrix);
        w.det_pi_units = det_in_pi_units(w.det, c.required, g);
        c.witnesses.push_back(std::move(w));
    }

    bool ok = c.rank == c.required;
    if (!ok) {
        std::string s = "projected rank " + std::to_string(c.rank) + " < " + std::to_string(c.required) + "; dependent rows:";
        for (auto r : br.dependent_rows) s += " delta" + pair_str(c.pairs[r]);
        c.failure = s;
    }
    for (const auto& pc : c.checks)
        if (!pc.reaches_new_modes) {
            ok = false;
            if (!c.failure.empty()) c.failure += "; ";
            c.failure += "projection of delta" + pair_str(pc.pair) + " vanishes";
        }

    if (c.square_mode) {
        const auto rd = deltas_of(c.repair_pairs);
        c.repair_matrix = project_rows(rd, c.repair_columns);
        c.repair_rank = bareiss_rank(c.repair_matrix).rank;
        DeterminantWitness w;
        w.label = "square repair determinant";
        w.rows = c.repair_pairs;
        w.cols = c.repair_columns;
        w.det = bareiss_determinant(c.repair_matrix);
        w.det_pi_units = det_in_pi_units(w.det, 3, g);
        c.witnesses.push_back(w);
        if (c.repair_rank != c.repair_columns.size()) {
            ok = false;
            if (!c.failure.empty()) c.failure += "; ";
            c.failure += "square repair block is singular";
        }
    }

    // the combined family {e_k : k in K^j} with all deltas
    ModeSet coords = next;
    std::vector<DeltaVector> all = deltas;
    if (c.square_mode) {
        for (const auto& d : deltas_of(c.repair_pairs)) all.push_back(d);
        coords = set_union(coords, c.repair_columns);
    }
    RationalMatrix comb;
    for (const auto& k : prev) {
        std::vector<Rational> row(coords.size(), Rational(0));
        row[static_cast<std::size_t>(std::lower_bound(coords.begin(), coords.end(), k) - coords.begin())] = 1;
        comb.push_back(std::move(row));
    }
    for (const auto& d : all) {
        std::vector<Rational> row;
        for (const auto& k : coords) row.push_back(d.entry(k));
        comb.push_back(std::move(row));
    }
    c.combined_rank = bareiss_rank(comb).rank;
    c.combined_required = prev.size() + c.required + (c.square_mode ? c.repair_columns.size() : 0);
    if (c.combined_rank != c.combined_required) ok = false;

    c.verdict = ok;
    return c;
}

int chain_level_for(const ModeSet& target) {
    int level = 1;
    for (const auto& k : target) {
        if (!k.valid()) throw std::invalid_argument("target mode " + k.str() + " is not a valid index");
        while (!contains(mode_set_K(level), k)) ++level;
    }
    return level;
}

SaturationChain build_chain(const ModeSet& target, const ExactGeometry& g, bool square_repair) {
    SaturationChain chain;
    chain.geom = g;
    chain.target = normalize(target);
    chain.final_level = chain_level_for(chain.target);

    const RectGeometry fg(g.a(), g.b());
    std::mt19937_64 rng(1234);
    std::normal_distribution<double> nd;
    for (int j = 1; j < chain.final_level; ++j) {
        auto cert = verify_step(j, g, square_repair && g.is_square());
        if (!cert.verdict) {
            chain.pass = false;
            chain.steps.push_back(cert);
            throw ChainFailure("saturation step " + std::to_string(j) + " failed: " + cert.failure, cert);
        }
        // convexification witness: (Q(u+v)+Q(u-v))/2 - Q(u) = Q(v) = +-lambda delta
        const ModeSet next = mode_set_K(j + 1);
        auto pairs = cert.pairs;
        pairs.insert(pairs.end(), cert.repair_pairs.begin(), cert.repair_pairs.end());
        const ModeSet coords = set_union(set_union(next, mode_set_K(j + 2)), cert.repair_columns);
        for (const auto& p : pairs) {
            SpectralField u(fg);
            for (const auto& k : mode_set_K(j)) u.set(k, 0.1 * nd(rng));
            const double lambda = 0.75;
            SpectralField v(fg), w(fg);
            v.set(p.second, lambda);
            v.set(p.first, 1.0);
            w.set(p.second, lambda);
            w.set(p.first, -1.0);
            const auto delta = delta_vector(p.first, p.second, g).to_field(fg);
            auto mid = [&](const SpectralField& d) {
                return 0.5 * (quadratic(u + d, coords) + quadratic(u - d, coords)) - quadratic(u, coords);
            };
            auto resid = [&](SpectralField a, const SpectralField& b) {
                a -= b;
                double s = 0.0;
                for (const auto& [k, x] : a.coeffs()) s = std::max(s, std::abs(x));
                return s;
            };
            FceWitness fw{p, lambda, resid(mid(v), lambda * delta), resid(mid(w), (-lambda) * delta)};
            chain.witnesses.push_back(fw);
        }
        chain.steps.push_back(std::move(cert));
    }
    return chain;
}

nlohmann::json to_json(const SaturationStepCertificate& c) {
    auto pairs_json = [](const std::vector<ModePair>& ps) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& p : ps) a.push_back({{p.first.k1, p.first.k2}, {p.second.k1, p.second.k2}});
        return a;
    };
    auto modes_json = [](const ModeSet& ms) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& k : ms) a.push_back({k.k1, k.k2});
        return a;
    };
    auto matrix_json = [](const RationalMatrix& m) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& r : m) {
            nlohmann::json row = nlohmann::json::array();
            for (const auto& q : r) row.push_back(to_string(q));
            a.push_back(row);
        }
        return a;
    };
    nlohmann::json j;
    j["level"] = c.level;
    j["square_mode"] = c.square_mode;
    j["pairs"] = pairs_json(c.pairs);
    if (!c.replaced_pairs.empty()) {
        j["square_replaced"] = pairs_json(c.replaced_pairs);
        j["square_substitutes"] = pairs_json(c.substitute_pairs);
    }
    j["columns"] = modes_json(c.columns);
    j["matrix"] = matrix_json(c.matrix);
    j["scale"] = "pi^2/(4ab)";
    j["rank"] = c.rank;
    j["required_rank"] = c.required;
    j["combined_rank"] = c.combined_rank;
    j["combined_required"] = c.combined_required;
    if (c.square_mode) {
        j["repair_pairs"] = pairs_json(c.repair_pairs);
        j["repair_columns"] = modes_json(c.repair_columns);
        j["repair_matrix"] = matrix_json(c.repair_matrix);
        j["repair_rank"] = c.repair_rank;
    }
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& pc : c.checks)
        checks.push_back({{"pair", pairs_json({pc.pair})[0]},
                          {"wedge", pc.wedge},
                          {"vee", pc.vee},
                          {"reaches_new_modes", pc.reaches_new_modes}});
    j["checks"] = checks;
    nlohmann::json ws = nlohmann::json::array();
    for (const auto& w : c.witnesses) {
        nlohmann::json x{{"label", w.label}, {"rows", pairs_json(w.rows)}, {"cols", modes_json(w.cols)},
                         {"det", to_string(w.det)}};
        if (!w.det_pi_units.empty()) x["det_over_pi_power"] = w.det_pi_units;
        ws.push_back(x);
    }
    j["determinant_witnesses"] = ws;
    j["verdict"] = c.verdict ? "pass" : "fail";
    if (!c.failure.empty()) j["failure"] = c.failure;
    return j;
}

nlohmann::json to_json(const SaturationChain& c) {
    nlohmann::json j;
    j["a2"] = to_string(c.geom.a2);
    j["b2"] = to_string(c.geom.b2);
    nlohmann::json t = nlohmann::json::array();
    for (const auto& k : c.target) t.push_back({k.k1, k.k2});
    j["target"] = t;
    j["final_level"] = c.final_level;
    j["steps"] = nlohmann::json::array();
    for (const auto& s : c.steps) j["steps"].push_back(to_json(s));
    nlohmann::json w = nlohmann::json::array();
    for (const auto& f : c.witnesses)
        w.push_back({{"pair", pair_str(f.pair)},
                     {"lambda", f.lambda},
                     {"residual_plus", f.residual_plus},
                     {"residual_minus", f.residual_minus}});
    j["convexification_witnesses"] = w;
    j["verdict"] = c.pass ? "pass" : "fail";
    return j;
}

std::string summary(const SaturationStepCertificate& c) {
    std::string s = "K^" + std::to_string(c.level) + " -> K^" + std::to_string(c.level + 1) + ": " +
                    std::to_string(c.pairs.size()) + " pairs, rank " + std::to_string(c.rank) + "/" +
                    std::to_string(c.required);
    if (c.square_mode) s += ", repair rank " + std::to_string(c.repair_rank) + "/3";
    s += ", combined " + std::to_string(c.combined_rank) + "/" + std::to_string(c.combined_required);
    s += c.verdict ? " [pass]" : " [fail] " + c.failure;
    return s;
}

}  // namespace galerkin
