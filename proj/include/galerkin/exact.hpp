#pragma once

#include <string>
#include <vector>

#include <gmpxx.h>

namespace galerkin {

using Rational = mpq_class;
using RationalMatrix = std::vector<std::vector<Rational>>;

Rational parse_rational(const std::string& s);  // "3", "-7/4", "1.25"
std::string to_string(const Rational& q);

// Geometry known through exact squares of the sides.
struct ExactGeometry {
    Rational a2{1};
    Rational b2{1};

    ExactGeometry() = default;
    ExactGeometry(Rational a2_, Rational b2_);
    static ExactGeometry from_sides(const Rational& a, const Rational& b);
    bool is_square() const { return a2 == b2; }
    double a() const;
    double b() const;
    // a*b when it is rational (a^2 b^2 a perfect rational square)
    bool ab_rational(Rational& out) const;
};

struct BareissResult {
    std::size_t rank = 0;
    std::vector<std::size_t> pivot_rows;  // original row indices of the pivots
    std::vector<std::size_t> pivot_cols;
    std::vector<std::size_t> dependent_rows;  // rows reduced to zero
};

// fraction-free elimination; rows are scaled to integers first
BareissResult bareiss_rank(const RationalMatrix& m);
Rational bareiss_determinant(const RationalMatrix& m);
RationalMatrix submatrix(const RationalMatrix& m, const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& cols);

}  // namespace galerkin
