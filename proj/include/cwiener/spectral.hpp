#ifndef CWIENER_SPECTRAL_HPP
#define CWIENER_SPECTRAL_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "cwiener/rational.hpp"

namespace cwiener {

/// 512 logarithmically spaced frequencies per side over
/// [1e-4, 1e4] * width, mirrored, plus zero. 1025 points total.
inline std::vector<double> probe_grid(double width) {
    const int n = 512;
    std::vector<double> grid;
    grid.reserve(2 * n + 1);
    const double lo = std::log10(1e-4 * width);
    const double hi = std::log10(1e4 * width);
    for (int k = n - 1; k >= 0; --k)
        grid.push_back(-std::pow(10.0, lo + (hi - lo) * k / (n - 1.0)));
    grid.push_back(0.0);
    for (int k = 0; k < n; ++k)
        grid.push_back(std::pow(10.0, lo + (hi - lo) * k / (n - 1.0)));
    return grid;
}

/// A characteristic frequency scale of f: the largest pole/zero magnitude.
inline double characteristic_width(const RationalFn& f) {
    double w = 0.0;
    for (const cplx& p : f.poles()) w = std::max(w, std::abs(p));
    for (const cplx& z : f.zeros()) w = std::max(w, std::abs(z));
    return w > 0.0 ? w : 1.0;
}

/// Two-sided power spectral density: a rational function restricted to the
/// imaginary axis s = i*Omega, validated to be real and non-negative there.
struct Psd {
    RationalFn f;

    Psd() = default;

    explicit Psd(RationalFn fn, double width = 0.0) : f(std::move(fn)) {
        if (width <= 0.0) width = characteristic_width(f);
        double peak = 0.0;
        std::vector<std::pair<double, cplx>> vals;
        for (double w : probe_grid(width)) {
            cplx v;
            try {
                v = f.eval(cplx{0.0, w});
            } catch (const pole_evaluation_error&) {
                throw invalid_psd_error("spectral density with a pole on the imaginary axis");
            }
            peak = std::max(peak, std::abs(v));
            vals.emplace_back(w, v);
        }
        for (const auto& [w, v] : vals) {
            if (std::abs(v.imag()) > 1e-9 * std::max(peak, 1e-300))
                throw invalid_psd_error("spectral density not real on the imaginary axis");
            if (v.real() < -1e-12 * peak)
                throw invalid_psd_error("spectral density has a negative lobe");
        }
    }

    double eval(double omega) const { return f.eval(cplx{0.0, omega}).real(); }
};

/// Causal/anticausal factor pair of a spectral density:
/// plus * minus = S, minus = conj_reflect(plus), plus minimum-phase
/// (all poles and zeros with Re s < 0).
struct SpectralFactors {
    RationalFn plus;
    RationalFn minus;
};

/// Wiener-Hopf factorization of a strictly positive rational density.
/// Roots and poles of S come in {r, -conj(r)} pairs; the factor `plus`
/// collects the left-half-plane members, with the full gain split evenly
/// (so the leading behavior of `plus` at s -> infinity is a positive real
/// multiple of a power of s).
inline SpectralFactors factorize(const Psd& S) {
    if (S.f.is_zero()) throw nonfactorizable_error("cannot factorize the zero density");

    const double width = characteristic_width(S.f);
    double minval = 1e300, peak = 0.0;
    for (double w : probe_grid(width)) {
        const double v = S.eval(w);
        minval = std::min(minval, v);
        peak = std::max(peak, v);
    }
    if (minval <= 1e-12 * peak)
        throw nonfactorizable_error("density not strictly positive on the probe grid");

    std::vector<cplx> lz, lp;
    for (const cplx& z : S.f.zeros()) {
        if (pole_is_marginal(z))
            throw nonfactorizable_error("density root on the imaginary axis");
        if (z.real() < 0.0) lz.push_back(z);
    }
    for (const cplx& p : S.f.poles()) {
        if (pole_is_marginal(p))
            throw nonfactorizable_error("density pole on the imaginary axis");
        if (p.real() < 0.0) lp.push_back(p);
    }
    if (2 * static_cast<int>(lz.size()) != S.f.num().degree() ||
        2 * static_cast<int>(lp.size()) != S.f.den().degree())
        throw nonfactorizable_error("roots/poles do not split evenly between half planes");

    RationalFn monic(Polynomial::from_roots(lz), Polynomial::from_roots(lp));
    const RationalFn prod = monic * monic.conj_reflect();

    // Remaining gain must be a positive real constant.
    const cplx g2 = S.f.eval(cplx{0.0, width}) / prod.eval(cplx{0.0, width});
    if (!(g2.real() > 0.0) || std::abs(g2.imag()) > 1e-9 * std::abs(g2))
        throw nonfactorizable_error("factorization gain not positive real");

    SpectralFactors out;
    out.plus = monic * cplx{std::sqrt(g2.real())};
    out.minus = out.plus.conj_reflect();
    return out;
}

/// Integral S(Omega) dOmega / 2pi over the whole axis, exact by residue
/// summation over the causal-half poles. Requires a decaying tail.
inline double integrate_psd(const Psd& S) {
    if (S.f.is_zero()) return 0.0;
    if (S.f.relative_degree() < 2)
        throw divergence_error("density does not decay; integral diverges");
    PartialFractions pf = partial_fractions(S.f);
    cplx sum = 0.0;
    for (const auto& t : pf.terms)
        if (t.pole.real() < 0.0) sum += t.residue;
    return std::max(0.0, sum.real());
}

/// Quadrature cross-check for integrate_psd: adaptive Simpson after the
/// compactifying substitution Omega = w0 * tan(theta).
inline double integrate_psd_quadrature(const Psd& S, double rel_tol = 1e-10) {
    const double w0 = characteristic_width(S.f);
    auto g = [&](double th) {
        const double c = std::cos(th);
        if (std::abs(c) < 1e-12) return 0.0;
        const double omega = w0 * std::tan(th);
        return S.eval(omega) * w0 / (c * c);
    };
    std::function<double(double, double, double, double, double, double, int)> simp =
        [&](double a, double b, double fa, double fm, double fb, double whole, int depth) {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const double flm = g(lm), frm = g(rm);
            const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if (depth > 0 && std::abs(left + right - whole) > rel_tol * std::abs(left + right) + 1e-300)
                return simp(a, m, fa, flm, fm, left, depth - 1) +
                       simp(m, b, fm, frm, fb, right, depth - 1);
            return left + right;
        };
    auto integrate = [&](double a, double b) {
        const double m = 0.5 * (a + b);
        const double fa = g(a), fm = g(m), fb = g(b);
        const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        return simp(a, b, fa, fm, fb, whole, 48);
    };
    // Split at zero; the density peak sits near theta = 0.
    const double half = std::atan(1e8);
    return (integrate(-half, 0.0) + integrate(0.0, half)) / (2.0 * M_PI);
}

struct CrossSpectrumReport {
    double max_violation = 0.0;  // max of |Sxy|^2 - Sxx*Syy*(1+tol), clipped at 0
    double worst_omega = 0.0;
    bool pass = true;
};

/// Schwarz consistency |Sxy|^2 <= Sxx * Syy on the probe grid.
inline CrossSpectrumReport cross_spectrum_check(const Psd& Sxx, const RationalFn& Sxy,
                                                const Psd& Syy) {
    CrossSpectrumReport rep;
    const double width = std::max(characteristic_width(Sxx.f), characteristic_width(Syy.f));
    for (double w : probe_grid(width)) {
        const double lhs = std::norm(Sxy.eval(cplx{0.0, w}));
        const double rhs = Sxx.eval(w) * Syy.eval(w) * (1.0 + 1e-9);
        if (lhs - rhs > rep.max_violation) {
            rep.max_violation = lhs - rhs;
            rep.worst_omega = w;
        }
    }
    rep.pass = rep.max_violation <= 0.0;
    return rep;
}

}  // namespace cwiener

#endif
