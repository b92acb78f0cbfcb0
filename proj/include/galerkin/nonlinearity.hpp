#pragma once

#include <array>
#include <optional>
#include <vector>

#include "galerkin/spectral.hpp"

namespace galerkin {

int wedge(const ModeIndex& m, const ModeIndex& n);
int vee(const ModeIndex& m, const ModeIndex& n);

enum class Branch { PP = 0, MM = 1, MP = 2, PM = 3 };
const char* branch_name(Branch b);

// target (n (+-) m)^+ of one branch; nullopt when a component is zero
std::optional<ModeIndex> branch_target(const ModeIndex& m, const ModeIndex& n, Branch b);

template <class S>
struct RatioTerm {
    Branch branch;
    ModeIndex target;
    S value;  // coefficient divided by pi^2/(4ab)
};

// Closed-form coefficients with the factor pi^2/(4ab) removed. The remaining
// scalars are rational in 1/a^2 and 1/b^2, so S may be an exact rational type.
template <class S>
std::vector<RatioTerm<S>> interaction_ratios(const ModeIndex& m, const ModeIndex& n, const S& inv_a2,
                                             const S& inv_b2) {
    auto bar = [&](const ModeIndex& k) -> S {
        return -(S(k.k1 * k.k1) * inv_a2 + S(k.k2 * k.k2) * inv_b2);
    };
    auto sgn = [](int x) { return (x > 0) - (x < 0); };
    const S dn = bar(n) - bar(m);
    const int w = wedge(m, n), v = vee(m, n);
    const int s1 = sgn(n.k1 - m.k1), s2 = sgn(n.k2 - m.k2);

    std::vector<RatioTerm<S>> out;
    for (Branch br : {Branch::PP, Branch::MM, Branch::MP, Branch::PM}) {
        auto t = branch_target(m, n, br);
        if (!t) continue;
        S scale{0};
        switch (br) {
            case Branch::PP: scale = S(-w); break;
            case Branch::MM: scale = S(w * s1 * s2); break;
            case Branch::MP: scale = S(-v * s1); break;
            case Branch::PM: scale = S(v * s2); break;
        }
        S value = scale * dn / bar(*t);
        out.push_back({br, *t, value});
    }
    return out;
}

struct InteractionCoeffs {
    std::array<std::optional<ModeIndex>, 4> targets;
    std::array<double, 4> values{0.0, 0.0, 0.0, 0.0};

    double cpp() const { return values[0]; }
    double cmm() const { return values[1]; }
    double cmp() const { return values[2]; }
    double cpm() const { return values[3]; }
    double value(Branch b) const { return values[static_cast<int>(b)]; }
    const std::optional<ModeIndex>& target(Branch b) const { return targets[static_cast<int>(b)]; }
    // contribution vector, summed over coinciding targets
    SpectralField contribution(const RectGeometry& g) const;
};

// requires m < n lexicographically
InteractionCoeffs interaction_coeffs(const ModeIndex& m, const ModeIndex& n, const RectGeometry& g);

SpectralField quadratic(const SpectralField& u, const ModeSet& mode_set);
SpectralField bilinear(const SpectralField& u, const SpectralField& w, const ModeSet& mode_set);

// dense pair table over a fixed mode set
class QuadraticOperator {
public:
    QuadraticOperator() = default;
    QuadraticOperator(const RectGeometry& g, const ModeLayout& layout);

    void apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const;  // out = quadratic(u)
    Eigen::VectorXd operator()(const Eigen::VectorXd& u) const;
    // out = bilinear(u, w); also the derivative of quadratic at u in direction w
    void apply_bilinear(const Eigen::VectorXd& u, const Eigen::VectorXd& w, Eigen::VectorXd& out) const;
    std::size_t term_count() const { return terms_.size(); }

private:
    struct Term {
        int i, j, t;
        double c;
    };
    std::vector<Term> terms_;
    std::size_t dim_ = 0;
};

// Independent validation by tensor Gauss-Legendre quadrature of the trilinear form
// b(u, v, w) = sum_ij int u_i (d_i v_j) w_j.
class QuadratureOracle {
public:
    QuadratureOracle(const RectGeometry& g, int max_index);

    const RectGeometry& geometry() const { return geom_; }
    double trilinear(const SpectralField& u, const SpectralField& v, const SpectralField& w) const;
    // k-th coefficient of the projected convective term -P(u.grad)v
    double coefficient(const SpectralField& u, const SpectralField& v, const ModeIndex& k) const;
    double inner(const SpectralField& u, const SpectralField& v) const;  // L2(R)

    struct Grid {
        std::vector<double> w1, w2, d11, d12, d21, d22;
    };
    const Grid& grid(const ModeIndex& k) const;
    const std::vector<double>& weights() const { return weights_; }

private:
    void accumulate(const SpectralField& u, std::vector<double>& f1, std::vector<double>& f2, bool grad,
                    std::vector<double>* g11, std::vector<double>* g12, std::vector<double>* g21,
                    std::vector<double>* g22) const;
    RectGeometry geom_;
    int n_;
    Quadrature2D rule_;
    std::vector<double> weights_;
    mutable std::map<ModeIndex, Grid> cache_;
};

double trilinear_b(const SpectralField& u, const SpectralField& v, const SpectralField& w);
double quadrature_B(const SpectralField& u, const SpectralField& v, const ModeIndex& k);

struct OracleRow {
    ModeIndex m, n, target;
    double closed_form = 0.0;
    double quadrature = 0.0;
    double rel_err = 0.0;  // against max(|closed form|, abs_floor / rel_tol), so pass means rel_err <= rel_tol
    bool pass = true;
};

struct OracleOptions {
    double rel_tol = 1e-8;
    double abs_floor = 1e-12;
    bool check_off_target = true;
};

// every pair m < n with components <= max_index
std::vector<OracleRow> oracle_sweep(const RectGeometry& g, int max_index, const OracleOptions& opt = {});

}  // namespace galerkin
