#include "galerkin/exact.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace galerkin {

Rational parse_rational(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty rational literal");
    auto dot = s.find('.');
    if (dot == std::string::npos) {
        Rational q;
        if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational literal '" + s + "'");
        q.canonicalize();
        if (q.get_den() == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
        return q;
    }
    // decimal literal, exact
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    const std::size_t places = s.size() - dot - 1;
    mpz_class num;
    if (num.set_str(digits.empty() || digits == "-" ? "0" : digits, 10) != 0)
        throw std::invalid_argument("bad decimal literal '" + s + "'");
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, places);
    Rational q(num, den);
    q.canonicalize();
    return q;
}

std::string to_string(const Rational& q) { return q.get_str(); }

ExactGeometry::ExactGeometry(Rational a2_, Rational b2_) : a2(std::move(a2_)), b2(std::move(b2_)) {
    if (sgn(a2) <= 0 || sgn(b2) <= 0) throw std::invalid_argument("squared sides must be positive");
}

ExactGeometry ExactGeometry::from_sides(const Rational& a, const Rational& b) {
    return ExactGeometry(a * a, b * b);
}

double ExactGeometry::a() const { return std::sqrt(a2.get_d()); }
double ExactGeometry::b() const { return std::sqrt(b2.get_d()); }

static bool rational_sqrt(const Rational& q, Rational& out) {
    if (sgn(q) < 0) return false;
    mpz_class n = q.get_num(), d = q.get_den();
    if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t())) return false;
    mpz_class rn, rd;
    mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
    mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
    out = Rational(rn, rd);
    out.canonicalize();
    return true;
}

bool ExactGeometry::ab_rational(Rational& out) const { return rational_sqrt(a2 * b2, out); }

static std::vector<std::vector<mpz_class>> integer_rows(const RationalMatrix& m) {
    std::vector<std::vector<mpz_class>> out;
    out.reserve(m.size());
    for (const auto& row : m) {
        mpz_class l = 1;
        for (const auto& q : row) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
        std::vector<mpz_class> r;
        r.reserve(row.size());
        for (const auto& q : row) r.push_back(q.get_num() * (l / q.get_den()));
        out.push_back(std::move(r));
    }
    return out;
}

BareissResult bareiss_rank(const RationalMatrix& m) {
    BareissResult res;
    if (m.empty()) return res;
    const std::size_t cols = m.front().size();
    for (const auto& r : m)
        if (r.size() != cols) throw std::invalid_argument("ragged matrix");
    auto a = integer_rows(m);
    const std::size_t rows = a.size();
    std::vector<std::size_t> order(rows);
    for (std::size_t i = 0; i < rows; ++i) order[i] = i;

    mpz_class prev = 1;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && a[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(a[piv], a[r]);
        std::swap(order[piv], order[r]);
        for (std::size_t i = r + 1; i < rows; ++i) {
            for (std::size_t j = c + 1; j < cols; ++j) {
                a[i][j] = a[r][c] * a[i][j] - a[i][c] * a[r][j];
                mpz_divexact(a[i][j].get_mpz_t(), a[i][j].get_mpz_t(), prev.get_mpz_t());
            }
            a[i][c] = 0;
        }
        prev = a[r][c];
        res.pivot_rows.push_back(order[r]);
        res.pivot_cols.push_back(c);
        ++r;
    }
    res.rank = r;
    for (std::size_t i = r; i < rows; ++i) res.dependent_rows.push_back(order[i]);
    return res;
}

Rational bareiss_determinant(const RationalMatrix& m) {
    const std::size_t n = m.size();
    for (const auto& r : m)
        if (r.size() != n) throw std::invalid_argument("determinant needs a square matrix");
    if (n == 0) return Rational(1);

    Rational scale = 1;
    std::vector<std::vector<mpz_class>> a;
    for (const auto& row : m) {
        mpz_class l = 1;
        for (const auto& q : row) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
        scale *= Rational(l);
        std::vector<mpz_class> r;
        for (const auto& q : row) r.push_back(q.get_num() * (l / q.get_den()));
        a.push_back(std::move(r));
    }
    int sign = 1;
    mpz_class prev = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (a[k][k] == 0) {
            std::size_t p = k + 1;
            while (p < n && a[p][k] == 0) ++p;
            if (p == n) return Rational(0);
            std::swap(a[p], a[k]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) {
                a[i][j] = a[k][k] * a[i][j] - a[i][k] * a[k][j];
                mpz_divexact(a[i][j].get_mpz_t(), a[i][j].get_mpz_t(), prev.get_mpz_t());
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    Rational det(a[n - 1][n - 1] * sign);
    det /= scale;
    det.canonicalize();
    return det;
}

RationalMatrix submatrix(const RationalMatrix& m, const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& cols) {
    RationalMatrix out;
    for (auto i : rows) {
        std::vector<Rational> r;
        for (auto j : cols) r.push_back(m.at(i).at(j));
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace galerkin
