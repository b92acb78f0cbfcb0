#include "galerkin/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace galerkin {

int wedge(const ModeIndex& m, const ModeIndex& n) { return m.k1 * n.k2 - n.k1 * m.k2; }
int vee(const ModeIndex& m, const ModeIndex& n) { return m.k1 * n.k2 + n.k1 * m.k2; }

const char* branch_name(Branch b) {
    switch (b) {
        case Branch::PP: return "++";
        case Branch::MM: return "--";
        case Branch::MP: return "-+";
        case Branch::PM: return "+-";
    }
    return "?";
}

std::optional<ModeIndex> branch_target(const ModeIndex& m, const ModeIndex& n, Branch b) {
    ModeIndex t;
    switch (b) {
        case Branch::PP: t = {n.k1 + m.k1, n.k2 + m.k2}; break;
        case Branch::MM: t = {std::abs(n.k1 - m.k1), std::abs(n.k2 - m.k2)}; break;
        case Branch::MP: t = {std::abs(n.k1 - m.k1), n.k2 + m.k2}; break;
        case Branch::PM: t = {n.k1 + m.k1, std::abs(n.k2 - m.k2)}; break;
    }
    if (t.k1 == 0 || t.k2 == 0) return std::nullopt;
    return t;
}

SpectralField InteractionCoeffs::contribution(const RectGeometry& g) const {
    SpectralField out(g);
    for (int i = 0; i < 4; ++i)
        if (targets[i]) out.add(*targets[i], values[i]);
    return out;
}

InteractionCoeffs interaction_coeffs(const ModeIndex& m, const ModeIndex& n, const RectGeometry& g) {
    if (!(m < n)) throw std::invalid_argument("interaction_coeffs needs m < n, got " + m.str() + " and " + n.str());
    if (!m.valid() || !n.valid()) throw std::invalid_argument("mode indices must be positive");
    const double f = pi * pi / (4.0 * g.a * g.b);
    InteractionCoeffs c;
    for (const auto& t : interaction_ratios<double>(m, n, 1.0 / (g.a * g.a), 1.0 / (g.b * g.b))) {
        const int i = static_cast<int>(t.branch);
        c.targets[i] = t.target;
        c.values[i] = f * t.value;
    }
    return c;
}

SpectralField quadratic(const SpectralField& u, const ModeSet& mode_set) {
    const auto& g = u.geometry();
    SpectralField out(g);
    std::vector<std::pair<ModeIndex, double>> terms;
    for (const auto& [k, c] : u.coeffs()) {
        if (!contains(mode_set, k)) {
            if (c != 0.0) throw std::invalid_argument("field mode " + k.str() + " outside the mode set");
            continue;
        }
        if (c != 0.0) terms.emplace_back(k, c);
    }
    for (std::size_t i = 0; i < terms.size(); ++i)
        for (std::size_t j = i + 1; j < terms.size(); ++j) {
            const auto ic = interaction_coeffs(terms[i].first, terms[j].first, g);
            const double uu = terms[i].second * terms[j].second;
            for (int b = 0; b < 4; ++b)
                if (ic.targets[b] && contains(mode_set, *ic.targets[b])) out.add(*ic.targets[b], uu * ic.values[b]);
        }
    return out;
}

SpectralField bilinear(const SpectralField& u, const SpectralField& w, const ModeSet& mode_set) {
    return quadratic(u + w, mode_set) - quadratic(u, mode_set) - quadratic(w, mode_set);
}

QuadraticOperator::QuadraticOperator(const RectGeometry& g, const ModeLayout& layout) : dim_(layout.size()) {
    for (std::size_t i = 0; i < layout.size(); ++i)
        for (std::size_t j = i + 1; j < layout.size(); ++j) {
            const auto ic = interaction_coeffs(layout[i], layout[j], g);
            for (int b = 0; b < 4; ++b) {
                if (!ic.targets[b]) continue;
                const int t = layout.find(*ic.targets[b]);
                if (t < 0 || ic.values[b] == 0.0) continue;
                terms_.push_back({static_cast<int>(i), static_cast<int>(j), t, ic.values[b]});
            }
        }
}

void QuadraticOperator::apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
    out.setZero(static_cast<Eigen::Index>(dim_));
    for (const auto& t : terms_) out[t.t] += t.c * u[t.i] * u[t.j];
}

Eigen::VectorXd QuadraticOperator::operator()(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out;
    apply(u, out);
    return out;
}

void QuadraticOperator::apply_bilinear(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                                       Eigen::VectorXd& out) const {
    out.setZero(static_cast<Eigen::Index>(dim_));
    for (const auto& t : terms_) out[t.t] += t.c * (u[t.i] * w[t.j] + u[t.j] * w[t.i]);
}

QuadratureOracle::QuadratureOracle(const RectGeometry& g, int max_index)
    : geom_(g), n_(std::max(2 * max_index + 2, 3 * max_index + 16)), rule_(gauss_rectangle(g, n_)) {
    weights_.resize(rule_.x1.size() * rule_.x2.size());
    for (std::size_t i = 0; i < rule_.x1.size(); ++i)
        for (std::size_t j = 0; j < rule_.x2.size(); ++j) weights_[i * rule_.x2.size() + j] = rule_.w1[i] * rule_.w2[j];
}

const QuadratureOracle::Grid& QuadratureOracle::grid(const ModeIndex& k) const {
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    Grid gr;
    const std::size_t N = weights_.size();
    for (auto* v : {&gr.w1, &gr.w2, &gr.d11, &gr.d12, &gr.d21, &gr.d22}) v->resize(N);
    for (std::size_t i = 0; i < rule_.x1.size(); ++i)
        for (std::size_t j = 0; j < rule_.x2.size(); ++j) {
            const std::size_t p = i * rule_.x2.size() + j;
            const auto W = basis_W(k, geom_, rule_.x1[i], rule_.x2[j]);
            const auto D = basis_gradW(k, geom_, rule_.x1[i], rule_.x2[j]);
            gr.w1[p] = W[0];
            gr.w2[p] = W[1];
            gr.d11[p] = D[0];
            gr.d12[p] = D[1];
            gr.d21[p] = D[2];
            gr.d22[p] = D[3];
        }
    return cache_.emplace(k, std::move(gr)).first->second;
}

void QuadratureOracle::accumulate(const SpectralField& u, std::vector<double>& f1, std::vector<double>& f2, bool grad,
                                  std::vector<double>* g11, std::vector<double>* g12, std::vector<double>* g21,
                                  std::vector<double>* g22) const {
    const std::size_t N = weights_.size();
    f1.assign(N, 0.0);
    f2.assign(N, 0.0);
    if (grad)
        for (auto* v : {g11, g12, g21, g22}) v->assign(N, 0.0);
    for (const auto& [k, c] : u.coeffs()) {
        if (c == 0.0) continue;
        const auto& gr = grid(k);
        for (std::size_t p = 0; p < N; ++p) {
            f1[p] += c * gr.w1[p];
            f2[p] += c * gr.w2[p];
        }
        if (grad)
            for (std::size_t p = 0; p < N; ++p) {
                (*g11)[p] += c * gr.d11[p];
                (*g12)[p] += c * gr.d12[p];
                (*g21)[p] += c * gr.d21[p];
                (*g22)[p] += c * gr.d22[p];
            }
    }
}

double QuadratureOracle::trilinear(const SpectralField& u, const SpectralField& v, const SpectralField& w) const {
    std::vector<double> u1, u2, v1, v2, w1, w2, d11, d12, d21, d22;
    accumulate(u, u1, u2, false, nullptr, nullptr, nullptr, nullptr);
    accumulate(v, v1, v2, true, &d11, &d12, &d21, &d22);
    accumulate(w, w1, w2, false, nullptr, nullptr, nullptr, nullptr);
    double s = 0.0;
    for (std::size_t p = 0; p < weights_.size(); ++p) {
        const double c1 = u1[p] * d11[p] + u2[p] * d12[p];
        const double c2 = u1[p] * d21[p] + u2[p] * d22[p];
        s += weights_[p] * (c1 * w1[p] + c2 * w2[p]);
    }
    return s;
}

double QuadratureOracle::coefficient(const SpectralField& u, const SpectralField& v, const ModeIndex& k) const {
    const double b = trilinear(u, v, unit_field(geom_, k));
    return -b / (-kbar(k, geom_) * geom_.area() / 4.0);
}

double QuadratureOracle::inner(const SpectralField& u, const SpectralField& v) const {
    std::vector<double> u1, u2, v1, v2;
    accumulate(u, u1, u2, false, nullptr, nullptr, nullptr, nullptr);
    accumulate(v, v1, v2, false, nullptr, nullptr, nullptr, nullptr);
    double s = 0.0;
    for (std::size_t p = 0; p < weights_.size(); ++p) s += weights_[p] * (u1[p] * v1[p] + u2[p] * v2[p]);
    return s;
}

static int max_component(std::initializer_list<const SpectralField*> fields) {
    int m = 1;
    for (const auto* f : fields)
        for (const auto& [k, c] : f->coeffs()) m = std::max({m, k.k1, k.k2});
    return m;
}

double trilinear_b(const SpectralField& u, const SpectralField& v, const SpectralField& w) {
    QuadratureOracle q(u.geometry(), max_component({&u, &v, &w}));
    return q.trilinear(u, v, w);
}

double quadrature_B(const SpectralField& u, const SpectralField& v, const ModeIndex& k) {
    const int top = std::max({max_component({&u, &v}), k.k1, k.k2});
    QuadratureOracle q(u.geometry(), top);
    return q.coefficient(u, v, k);
}

std::vector<OracleRow> oracle_sweep(const RectGeometry& g, int max_index, const OracleOptions& opt) {
    ModeSet modes;
    for (int i = 1; i <= max_index; ++i)
        for (int j = 1; j <= max_index; ++j) modes.push_back({i, j});
    const int reach = 2 * max_index;
    QuadratureOracle q(g, reach);
    const auto& wts = q.weights();
    const std::size_t N = wts.size();
    std::vector<OracleRow> rows;
    std::vector<double> c1(N), c2(N);

    for (std::size_t i = 0; i < modes.size(); ++i)
        for (std::size_t j = i + 1; j < modes.size(); ++j) {
            const auto& m = modes[i];
            const auto& n = modes[j];
            const auto& gm = q.grid(m);
            const auto& gn = q.grid(n);
            // (W_m . grad) W_n + (W_n . grad) W_m
            for (std::size_t p = 0; p < N; ++p) {
                c1[p] = gm.w1[p] * gn.d11[p] + gm.w2[p] * gn.d12[p] + gn.w1[p] * gm.d11[p] + gn.w2[p] * gm.d12[p];
                c2[p] = gm.w1[p] * gn.d21[p] + gm.w2[p] * gn.d22[p] + gn.w1[p] * gm.d21[p] + gn.w2[p] * gm.d22[p];
            }
            auto projected = [&](const ModeIndex& k) {
                const auto& gk = q.grid(k);
                double s = 0.0;
                for (std::size_t p = 0; p < N; ++p) s += wts[p] * (c1[p] * gk.w1[p] + c2[p] * gk.w2[p]);
                return -s / (-kbar(k, g) * g.area() / 4.0);
            };
            const auto closed = interaction_coeffs(m, n, g).contribution(g);
            auto judge = [&](OracleRow& r) {
                const double diff = std::abs(r.closed_form - r.quadrature);
                r.rel_err = diff / std::max(std::abs(r.closed_form), opt.abs_floor / opt.rel_tol);
                r.pass = diff <= std::max(opt.rel_tol * std::abs(r.closed_form), opt.abs_floor);
            };
            for (const auto& [t, v] : closed.coeffs()) {
                OracleRow r{m, n, t, v, projected(t)};
                judge(r);
                rows.push_back(r);
            }
            if (!opt.check_off_target) continue;
            for (int a = 1; a <= reach; ++a)
                for (int b = 1; b <= reach; ++b) {
                    const ModeIndex k{a, b};
                    if (closed.coeffs().count(k)) continue;
                    OracleRow r{m, n, k, 0.0, projected(k)};
                    judge(r);
                    rows.push_back(r);
                }
        }
    return rows;
}

}  // namespace galerkin
