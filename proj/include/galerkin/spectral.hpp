#pragma once

#include <array>
#include <compare>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace galerkin {

inline constexpr double pi = 3.14159265358979323846;

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct RectGeometry {
    double a = 1.0;
    double b = 1.0;

    RectGeometry() = default;
    RectGeometry(double a_, double b_);
    double area() const { return a * b; }
};

struct ModeIndex {
    int k1 = 1;
    int k2 = 1;

    auto operator<=>(const ModeIndex&) const = default;
    bool valid() const { return k1 >= 1 && k2 >= 1; }
    std::string str() const;
};

using ModeSet = std::vector<ModeIndex>;

// sorted, duplicates removed; throws on a non-positive component
ModeSet normalize(ModeSet modes);
ModeSet mode_set_K(int level);
bool contains(const ModeSet& set, const ModeIndex& k);
ModeSet set_difference(const ModeSet& a, const ModeSet& b);
ModeSet set_union(const ModeSet& a, const ModeSet& b);
bool is_subset(const ModeSet& a, const ModeSet& b);

// position lookup for dense work vectors
class ModeLayout {
public:
    ModeLayout() = default;
    explicit ModeLayout(ModeSet modes);

    const ModeSet& modes() const { return modes_; }
    std::size_t size() const { return modes_.size(); }
    int find(const ModeIndex& k) const;
    const ModeIndex& operator[](std::size_t i) const { return modes_[i]; }

private:
    ModeSet modes_;
    std::map<ModeIndex, int> pos_;
};

class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(RectGeometry g) : geom_(g) {}
    SpectralField(RectGeometry g, std::map<ModeIndex, double> c);

    const RectGeometry& geometry() const { return geom_; }
    const std::map<ModeIndex, double>& coeffs() const { return coeffs_; }

    double operator[](const ModeIndex& k) const;
    void set(const ModeIndex& k, double v);
    void add(const ModeIndex& k, double v);
    bool empty() const { return coeffs_.empty(); }
    ModeSet support() const;
    void prune(double eps = 0.0);

    SpectralField& operator+=(const SpectralField& o);
    SpectralField& operator-=(const SpectralField& o);
    SpectralField& operator*=(double s);

    Eigen::VectorXd dense(const ModeLayout& layout) const;
    static SpectralField from_dense(RectGeometry g, const ModeLayout& layout, const Eigen::VectorXd& v);

private:
    RectGeometry geom_;
    std::map<ModeIndex, double> coeffs_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);
SpectralField unit_field(RectGeometry g, ModeIndex k, double value = 1.0);

double kbar(const ModeIndex& k, const RectGeometry& g);

using Vec2 = std::array<double, 2>;

Vec2 basis_W(const ModeIndex& k, const RectGeometry& g, double x1, double x2);
// rows: d/dx1 and d/dx2 of (W1, W2) -> {dW1/dx1, dW1/dx2, dW2/dx1, dW2/dx2}
std::array<double, 4> basis_gradW(const ModeIndex& k, const RectGeometry& g, double x1, double x2);
Vec2 eval_velocity(const SpectralField& u, double x1, double x2);

enum class NormKind { H, V, DA };
NormKind parse_norm_kind(const std::string& s);
double norm(const SpectralField& u, NormKind kind);
double h_inner(const SpectralField& u, const SpectralField& w);
// dual of V with H as pivot space: (ab/4) sum f_k^2
double dual_norm_Vprime(const SpectralField& f);
// dense versions over a layout, same weights
double norm_dense(const Eigen::VectorXd& u, const ModeLayout& layout, const RectGeometry& g, NormKind kind);
double vprime_dense(const Eigen::VectorXd& f, const ModeLayout& layout, const RectGeometry& g);

// tables of the sine-cosine expansion of a (not necessarily solenoidal) field;
// v1 on sin(k1 pi x1/a) cos(k2 pi x2/b), k1 >= 1, k2 >= 0
// v2 on cos(k1 pi x1/a) sin(k2 pi x2/b), k1 >= 0, k2 >= 1
using CoeffTable = std::map<std::pair<int, int>, double>;

struct GradientPart {
    std::map<int, double> axis_coeffs_x1;  // cos(k1 pi x1/a)
    std::map<int, double> axis_coeffs_x2;  // cos(k2 pi x2/b)
    std::map<ModeIndex, double> interior_coeffs;  // cos cos

    bool empty(double eps = 0.0) const;
};

std::pair<SpectralField, GradientPart> leray_project(const CoeffTable& v1, const CoeffTable& v2,
                                                     const RectGeometry& g);
// inverse map: tables of u + grad q
std::pair<CoeffTable, CoeffTable> recompose(const SpectralField& u, const GradientPart& q);
Vec2 eval_tables(const CoeffTable& v1, const CoeffTable& v2, const RectGeometry& g, double x1, double x2);
double eval_potential(const GradientPart& q, const RectGeometry& g, double x1, double x2);

// tensor Gauss-Legendre rule on [0,a]x[0,b]
struct Quadrature2D {
    std::vector<double> x1, w1, x2, w2;
};
Quadrature2D gauss_rectangle(const RectGeometry& g, int points_per_axis);
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

// JSON round trip, coefficients in lexicographic order
nlohmann::json to_json(const SpectralField& u);
SpectralField field_from_json(const nlohmann::json& j);
std::string mode_label(const ModeIndex& k);

}  // namespace galerkin
