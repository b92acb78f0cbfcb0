#include "galerkin/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/legendre.hpp>

namespace galerkin {

RectGeometry::RectGeometry(double a_, double b_) : a(a_), b(b_) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("rectangle sides must be positive");
}

std::string ModeIndex::str() const {
    return "(" + std::to_string(k1) + "," + std::to_string(k2) + ")";
}

std::string mode_label(const ModeIndex& k) {
    return std::to_string(k.k1) + "." + std::to_string(k.k2);
}

ModeSet normalize(ModeSet modes) {
    for (const auto& k : modes)
        if (!k.valid()) throw std::invalid_argument("mode index " + k.str() + " has a non-positive component");
    std::sort(modes.begin(), modes.end());
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
    return modes;
}

ModeSet mode_set_K(int level) {
    if (level < 1) throw std::invalid_argument("mode set level must be >= 1");
    const int top = level + 2;
    ModeSet out;
    for (int i = 1; i <= top; ++i)
        for (int j = 1; j <= top; ++j)
            if (!(i == top && j == top)) out.push_back({i, j});
    return out;
}

bool contains(const ModeSet& set, const ModeIndex& k) {
    return std::binary_search(set.begin(), set.end(), k);
}

ModeSet set_difference(const ModeSet& a, const ModeSet& b) {
    ModeSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

ModeSet set_union(const ModeSet& a, const ModeSet& b) {
    ModeSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

bool is_subset(const ModeSet& a, const ModeSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

ModeLayout::ModeLayout(ModeSet modes) : modes_(normalize(std::move(modes))) {
    for (std::size_t i = 0; i < modes_.size(); ++i) pos_[modes_[i]] = static_cast<int>(i);
}

int ModeLayout::find(const ModeIndex& k) const {
    auto it = pos_.find(k);
    return it == pos_.end() ? -1 : it->second;
}

SpectralField::SpectralField(RectGeometry g, std::map<ModeIndex, double> c) : geom_(g), coeffs_(std::move(c)) {
    for (const auto& [k, v] : coeffs_)
        if (!k.valid()) throw std::invalid_argument("mode index " + k.str() + " has a non-positive component");
}

double SpectralField::operator[](const ModeIndex& k) const {
    auto it = coeffs_.find(k);
    return it == coeffs_.end() ? 0.0 : it->second;
}

void SpectralField::set(const ModeIndex& k, double v) {
    if (!k.valid()) throw std::invalid_argument("mode index " + k.str() + " has a non-positive component");
    coeffs_[k] = v;
}

void SpectralField::add(const ModeIndex& k, double v) {
    if (!k.valid()) throw std::invalid_argument("mode index " + k.str() + " has a non-positive component");
    coeffs_[k] += v;
}

ModeSet SpectralField::support() const {
    ModeSet out;
    for (const auto& [k, v] : coeffs_)
        if (v != 0.0) out.push_back(k);
    return out;
}

void SpectralField::prune(double eps) {
    std::erase_if(coeffs_, [eps](const auto& kv) { return std::abs(kv.second) <= eps; });
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
    for (const auto& [k, v] : o.coeffs_) coeffs_[k] += v;
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
    for (const auto& [k, v] : o.coeffs_) coeffs_[k] -= v;
    return *this;
}

SpectralField& SpectralField::operator*=(double s) {
    for (auto& [k, v] : coeffs_) v *= s;
    return *this;
}

Eigen::VectorXd SpectralField::dense(const ModeLayout& layout) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size()));
    for (const auto& [k, v] : coeffs_) {
        int p = layout.find(k);
        if (p < 0) {
            if (v != 0.0) throw std::invalid_argument("field has mode " + k.str() + " outside the mode set");
            continue;
        }
        out[p] = v;
    }
    return out;
}

SpectralField SpectralField::from_dense(RectGeometry g, const ModeLayout& layout, const Eigen::VectorXd& v) {
    SpectralField out(g);
    for (std::size_t i = 0; i < layout.size(); ++i) out.coeffs_[layout[i]] = v[static_cast<Eigen::Index>(i)];
    return out;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

SpectralField unit_field(RectGeometry g, ModeIndex k, double value) {
    SpectralField u(g);
    u.set(k, value);
    return u;
}

double kbar(const ModeIndex& k, const RectGeometry& g) {
    const double r1 = k.k1 / g.a, r2 = k.k2 / g.b;
    return -pi * pi * (r1 * r1 + r2 * r2);
}

Vec2 basis_W(const ModeIndex& k, const RectGeometry& g, double x1, double x2) {
    const double A = k.k1 * pi / g.a, B = k.k2 * pi / g.b;
    return {-B * std::sin(A * x1) * std::cos(B * x2), A * std::cos(A * x1) * std::sin(B * x2)};
}

std::array<double, 4> basis_gradW(const ModeIndex& k, const RectGeometry& g, double x1, double x2) {
    const double A = k.k1 * pi / g.a, B = k.k2 * pi / g.b;
    const double s1 = std::sin(A * x1), c1 = std::cos(A * x1);
    const double s2 = std::sin(B * x2), c2 = std::cos(B * x2);
    return {-B * A * c1 * c2, B * B * s1 * s2, -A * A * s1 * s2, A * B * c1 * c2};
}

static void check_inside(const RectGeometry& g, double x1, double x2) {
    const double e1 = 1e-12 * g.a, e2 = 1e-12 * g.b;
    if (!(x1 >= -e1 && x1 <= g.a + e1 && x2 >= -e2 && x2 <= g.b + e2))
        throw DomainError("point (" + std::to_string(x1) + ", " + std::to_string(x2) + ") lies outside the rectangle");
}

Vec2 eval_velocity(const SpectralField& u, double x1, double x2) {
    const auto& g = u.geometry();
    check_inside(g, x1, x2);
    Vec2 out{0.0, 0.0};
    for (const auto& [k, c] : u.coeffs()) {
        auto w = basis_W(k, g, x1, x2);
        out[0] += c * w[0];
        out[1] += c * w[1];
    }
    return out;
}

NormKind parse_norm_kind(const std::string& s) {
    if (s == "H") return NormKind::H;
    if (s == "V") return NormKind::V;
    if (s == "DA") return NormKind::DA;
    throw std::invalid_argument("unknown norm kind '" + s + "' (expected H, V or DA)");
}

static int norm_power(NormKind kind) {
    switch (kind) {
        case NormKind::H: return 1;
        case NormKind::V: return 2;
        case NormKind::DA: return 3;
    }
    return 1;
}

double norm(const SpectralField& u, NormKind kind) {
    const auto& g = u.geometry();
    const int p = norm_power(kind);
    double s = 0.0;
    for (const auto& [k, c] : u.coeffs()) s += std::pow(-kbar(k, g), p) * c * c;
    return std::sqrt(0.25 * g.area() * s);
}

double h_inner(const SpectralField& u, const SpectralField& w) {
    const auto& g = u.geometry();
    double s = 0.0;
    for (const auto& [k, c] : u.coeffs()) s += -kbar(k, g) * c * w[k];
    return 0.25 * g.area() * s;
}

double dual_norm_Vprime(const SpectralField& f) {
    const auto& g = f.geometry();
    double s = 0.0;
    for (const auto& [k, c] : f.coeffs()) s += c * c;
    return std::sqrt(0.25 * g.area() * s);
}

double norm_dense(const Eigen::VectorXd& u, const ModeLayout& layout, const RectGeometry& g, NormKind kind) {
    const int p = norm_power(kind);
    double s = 0.0;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const double c = u[static_cast<Eigen::Index>(i)];
        s += std::pow(-kbar(layout[i], g), p) * c * c;
    }
    return std::sqrt(0.25 * g.area() * s);
}

double vprime_dense(const Eigen::VectorXd& f, const ModeLayout& layout, const RectGeometry& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const double c = f[static_cast<Eigen::Index>(i)];
        s += c * c;
    }
    return std::sqrt(0.25 * g.area() * s);
}

bool GradientPart::empty(double eps) const {
    auto small = [eps](const auto& kv) { return std::abs(kv.second) <= eps; };
    return std::all_of(axis_coeffs_x1.begin(), axis_coeffs_x1.end(), small) &&
           std::all_of(axis_coeffs_x2.begin(), axis_coeffs_x2.end(), small) &&
           std::all_of(interior_coeffs.begin(), interior_coeffs.end(), small);
}

std::pair<SpectralField, GradientPart> leray_project(const CoeffTable& v1, const CoeffTable& v2,
                                                     const RectGeometry& g) {
    for (const auto& [k, v] : v1)
        if (k.first < 1 || k.second < 0) throw std::invalid_argument("v1 table index out of range");
    for (const auto& [k, v] : v2)
        if (k.first < 0 || k.second < 1) throw std::invalid_argument("v2 table index out of range");

    SpectralField u(g);
    GradientPart q;
    auto lookup = [](const CoeffTable& t, std::pair<int, int> k) {
        auto it = t.find(k);
        return it == t.end() ? 0.0 : it->second;
    };

    std::vector<std::pair<int, int>> keys;
    for (const auto& [k, v] : v1) keys.push_back(k);
    for (const auto& [k, v] : v2) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

    for (const auto& key : keys) {
        const auto [k1, k2] = key;
        const double a1 = lookup(v1, key), a2 = lookup(v2, key);
        if (k2 == 0) {
            q.axis_coeffs_x1[k1] = -a1 * g.a / (k1 * pi);
        } else if (k1 == 0) {
            q.axis_coeffs_x2[k2] = -a2 * g.b / (k2 * pi);
        } else {
            const ModeIndex k{k1, k2};
            const double kb = kbar(k, g);
            const double A = k1 * pi / g.a, B = k2 * pi / g.b;
            u.set(k, (B * a1 - A * a2) / kb);
            q.interior_coeffs[k] = (A * a1 + B * a2) / kb;
        }
    }
    return {u, q};
}

std::pair<CoeffTable, CoeffTable> recompose(const SpectralField& u, const GradientPart& q) {
    const auto& g = u.geometry();
    CoeffTable v1, v2;
    for (const auto& [k, c] : u.coeffs()) {
        v1[{k.k1, k.k2}] += -(k.k2 * pi / g.b) * c;
        v2[{k.k1, k.k2}] += (k.k1 * pi / g.a) * c;
    }
    for (const auto& [k, c] : q.interior_coeffs) {
        v1[{k.k1, k.k2}] += -(k.k1 * pi / g.a) * c;
        v2[{k.k1, k.k2}] += -(k.k2 * pi / g.b) * c;
    }
    for (const auto& [k1, c] : q.axis_coeffs_x1) v1[{k1, 0}] += -(k1 * pi / g.a) * c;
    for (const auto& [k2, c] : q.axis_coeffs_x2) v2[{0, k2}] += -(k2 * pi / g.b) * c;
    return {v1, v2};
}

Vec2 eval_tables(const CoeffTable& v1, const CoeffTable& v2, const RectGeometry& g, double x1, double x2) {
    Vec2 out{0.0, 0.0};
    for (const auto& [k, c] : v1)
        out[0] += c * std::sin(k.first * pi * x1 / g.a) * std::cos(k.second * pi * x2 / g.b);
    for (const auto& [k, c] : v2)
        out[1] += c * std::cos(k.first * pi * x1 / g.a) * std::sin(k.second * pi * x2 / g.b);
    return out;
}

double eval_potential(const GradientPart& q, const RectGeometry& g, double x1, double x2) {
    double s = 0.0;
    for (const auto& [k1, c] : q.axis_coeffs_x1) s += c * std::cos(k1 * pi * x1 / g.a);
    for (const auto& [k2, c] : q.axis_coeffs_x2) s += c * std::cos(k2 * pi * x2 / g.b);
    for (const auto& [k, c] : q.interior_coeffs)
        s += c * std::cos(k.k1 * pi * x1 / g.a) * std::cos(k.k2 * pi * x2 / g.b);
    return s;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("quadrature needs at least one point");
    auto pos = boost::math::legendre_p_zeros<double>(n);
    std::vector<double> x, w;
    for (double r : pos) {
        const double dp = boost::math::legendre_p_prime<double>(n, r);
        const double wt = 2.0 / ((1.0 - r * r) * dp * dp);
        if (r == 0.0) {
            x.push_back(0.0);
            w.push_back(wt);
        } else {
            x.push_back(r);
            w.push_back(wt);
            x.push_back(-r);
            w.push_back(wt);
        }
    }
    return {x, w};
}

Quadrature2D gauss_rectangle(const RectGeometry& g, int n) {
    auto [x, w] = gauss_legendre(n);
    Quadrature2D q;
    for (std::size_t i = 0; i < x.size(); ++i) {
        q.x1.push_back(0.5 * g.a * (x[i] + 1.0));
        q.w1.push_back(0.5 * g.a * w[i]);
        q.x2.push_back(0.5 * g.b * (x[i] + 1.0));
        q.w2.push_back(0.5 * g.b * w[i]);
    }
    return q;
}

nlohmann::json to_json(const SpectralField& u) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& [k, v] : u.coeffs()) coeffs.push_back({k.k1, k.k2, v});
    return {{"a", u.geometry().a}, {"b", u.geometry().b}, {"coeffs", coeffs}};
}

SpectralField field_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("a") || !j.contains("b"))
        throw std::invalid_argument("spectral field JSON needs fields 'a', 'b' and 'coeffs'");
    SpectralField u(RectGeometry(j.at("a").get<double>(), j.at("b").get<double>()));
    if (j.contains("coeffs")) {
        for (const auto& row : j.at("coeffs")) {
            if (!row.is_array() || row.size() != 3)
                throw std::invalid_argument("each coefficient entry must be [k1, k2, value]");
            u.add({row[0].get<int>(), row[1].get<int>()}, row[2].get<double>());
        }
    }
    return u;
}

}  // namespace galerkin
