#ifndef CWIENER_POLYNOMIAL_HPP
#define CWIENER_POLYNOMIAL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

#include "cwiener/errors.hpp"

namespace cwiener {

using cplx = std::complex<double>;

constexpr double kCoeffTrimTol = 1e-12;    // relative, trailing coefficient trim
constexpr double kRootClusterTol = 1e-9;   // relative, root matching / clustering
constexpr double kMarginalPoleTol = 1e-9;  // relative distance to the imaginary axis

/// Dense univariate polynomial with complex coefficients, lowest degree first.
/// The zero polynomial is represented explicitly as the single coefficient 0.
class Polynomial {
  public:
    Polynomial() : c_{cplx{0.0}} {}

    Polynomial(std::initializer_list<cplx> coeffs) : c_(coeffs) { trim(); }

    explicit Polynomial(std::vector<cplx> coeffs) : c_(std::move(coeffs)) { trim(); }

    static Polynomial constant(cplx value) { return Polynomial{value}; }

    /// Monic-times-leading polynomial with the given roots.
    static Polynomial from_roots(const std::vector<cplx>& roots, cplx leading = 1.0) {
        std::vector<cplx> c{leading};
        for (const cplx& r : roots) {
            std::vector<cplx> next(c.size() + 1, 0.0);
            for (std::size_t k = 0; k < c.size(); ++k) {
                next[k + 1] += c[k];
                next[k] -= r * c[k];
            }
            c = std::move(next);
        }
        return Polynomial(std::move(c));
    }

    const std::vector<cplx>& coeffs() const { return c_; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.size() == 1 && c_[0] == cplx{0.0}; }
    cplx leading() const { return c_.back(); }

    cplx eval(cplx s) const {
        cplx v = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) v = v * s + *it;
        return v;
    }

    Polynomial derivative() const {
        if (degree() == 0) return Polynomial{};
        std::vector<cplx> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = double(k) * c_[k];
        return Polynomial(std::move(d));
    }

    /// g(s) = conj(p(-conj(s))): coefficient-wise conj with alternating sign.
    /// On the imaginary axis, g(i w) = conj(p(i w)).
    Polynomial conj_reflect() const {
        std::vector<cplx> r(c_.size());
        for (std::size_t k = 0; k < c_.size(); ++k) {
            r[k] = std::conj(c_[k]) * ((k % 2) ? -1.0 : 1.0);
        }
        return Polynomial(std::move(r));
    }

    double max_coeff_mag() const {
        double m = 0.0;
        for (const cplx& c : c_) m = std::max(m, std::abs(c));
        return m;
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        std::vector<cplx> c(std::max(a.c_.size(), b.c_.size()), 0.0);
        for (std::size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
        for (std::size_t k = 0; k < b.c_.size(); ++k) c[k] += b.c_[k];
        return Polynomial(std::move(c));
    }

    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
        return a + (b * cplx{-1.0});
    }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.is_zero() || b.is_zero()) return Polynomial{};
        std::vector<cplx> c(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(c));
    }

    friend Polynomial operator*(const Polynomial& a, cplx k) {
        std::vector<cplx> c = a.c_;
        for (cplx& v : c) v *= k;
        return Polynomial(std::move(c));
    }

    friend Polynomial operator*(cplx k, const Polynomial& a) { return a * k; }

    /// Quotient and remainder of this / d.
    std::pair<Polynomial, Polynomial> divmod(const Polynomial& d) const {
        if (d.is_zero()) throw zero_polynomial_error("division by the zero polynomial");
        if (degree() < d.degree()) return {Polynomial{}, *this};
        std::vector<cplx> rem = c_;
        std::vector<cplx> quot(c_.size() - d.c_.size() + 1, 0.0);
        for (int k = static_cast<int>(quot.size()) - 1; k >= 0; --k) {
            cplx q = rem[k + d.degree()] / d.leading();
            quot[k] = q;
            for (int j = 0; j <= d.degree(); ++j) rem[k + j] -= q * d.c_[j];
        }
        return {Polynomial(std::move(quot)), Polynomial(std::move(rem))};
    }

  private:
    void trim() {
        if (c_.empty()) {
            c_ = {cplx{0.0}};
            return;
        }
        const double tol = kCoeffTrimTol * max_coeff_mag();
        while (c_.size() > 1 && std::abs(c_.back()) <= tol) c_.pop_back();
        if (c_.size() == 1 && std::abs(c_[0]) <= tol) c_[0] = 0.0;
    }

    std::vector<cplx> c_;
};

/// All complex roots of p, found as eigenvalues of the companion matrix and
/// polished with one Newton step each. Returned count equals the degree.
inline std::vector<cplx> roots(const Polynomial& p) {
    if (p.is_zero()) throw zero_polynomial_error("roots of the zero polynomial");
    const int n = p.degree();
    if (n < 1) return {};

    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) companion(i, n - 1) = -p.coeffs()[i] / p.leading();

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, /*computeEigenvectors=*/false);
    const Polynomial dp = p.derivative();

    std::vector<cplx> rs(n);
    for (int i = 0; i < n; ++i) {
        cplx r = es.eigenvalues()(i);
        const cplx d = dp.eval(r);
        if (std::abs(d) > 0.0) {
            const cplx step = p.eval(r) / d;
            if (std::abs(step) < 0.5 * (1.0 + std::abs(r))) r -= step;
        }
        rs[i] = r;
    }
    std::sort(rs.begin(), rs.end(), [](const cplx& a, const cplx& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return rs;
}

}  // namespace cwiener

#endif
