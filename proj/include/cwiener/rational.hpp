#ifndef CWIENER_RATIONAL_HPP
#define CWIENER_RATIONAL_HPP

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "cwiener/polynomial.hpp"

namespace cwiener {

inline bool roots_match(const cplx& a, const cplx& b) {
    return std::abs(a - b) <= kRootClusterTol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

inline bool pole_is_marginal(const cplx& p) {
    return std::abs(p.real()) <= kMarginalPoleTol * std::max(1.0, std::abs(p));
}

/// Ratio of two complex polynomials in a Laplace-type variable s.
/// Convention used throughout: causal <=> all poles satisfy Re s < 0.
/// On construction, shared num/den roots are cancelled and the denominator
/// is normalized to be monic.
class RationalFn {
  public:
    RationalFn() : num_{}, den_{cplx{1.0}} {}

    RationalFn(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero()) throw zero_polynomial_error("rational function with zero denominator");
        reduce();
    }

    static RationalFn constant(cplx value) {
        return RationalFn(Polynomial::constant(value), Polynomial::constant(1.0));
    }

    /// Single causal/anticausal mode residue/(s - pole).
    static RationalFn mode(cplx residue, cplx pole) {
        return RationalFn(Polynomial::constant(residue), Polynomial{-pole, 1.0});
    }

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }
    int relative_degree() const { return den_.degree() - num_.degree(); }
    bool proper() const { return num_.degree() <= den_.degree(); }
    bool strictly_proper() const { return num_.degree() < den_.degree(); }

    cplx eval(cplx s) const {
        const cplx d = den_.eval(s);
        const double scale = std::max(1.0, den_.max_coeff_mag()) *
                             std::pow(std::max(1.0, std::abs(s)), den_.degree());
        if (std::abs(d) <= 1e-13 * scale)
            throw pole_evaluation_error("evaluation at (or too close to) a pole");
        return num_.eval(s) / d;
    }

    std::vector<cplx> poles() const { return den_.degree() >= 1 ? roots(den_) : std::vector<cplx>{}; }
    std::vector<cplx> zeros() const {
        return (!num_.is_zero() && num_.degree() >= 1) ? roots(num_) : std::vector<cplx>{};
    }

    bool causal() const {
        for (const cplx& p : poles())
            if (p.real() >= 0.0) return false;
        return true;
    }

    /// g with g(s) = conj(f(-conj(s))); on the axis g(i w) = conj(f(i w)).
    RationalFn conj_reflect() const {
        return RationalFn(num_.conj_reflect(), den_.conj_reflect());
    }

    friend RationalFn operator+(const RationalFn& a, const RationalFn& b) {
        return add(a, b, cplx{1.0});
    }
    friend RationalFn operator-(const RationalFn& a, const RationalFn& b) {
        return add(a, b, cplx{-1.0});
    }
    friend RationalFn operator*(const RationalFn& a, const RationalFn& b) {
        return RationalFn(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend RationalFn operator/(const RationalFn& a, const RationalFn& b) {
        if (b.num_.is_zero()) throw zero_polynomial_error("division by the zero rational function");
        return RationalFn(a.num_ * b.den_, a.den_ * b.num_);
    }
    friend RationalFn operator*(const RationalFn& a, cplx k) {
        return RationalFn(a.num_ * k, a.den_);
    }
    friend RationalFn operator*(cplx k, const RationalFn& a) { return a * k; }

  private:
    /// a/q + sign * r/d over the root-matched least common multiple of q and
    /// d. Multiplying the denominators blindly would square any shared root,
    /// and extracting near-multiple roots later is ill-conditioned.
    static RationalFn add(const RationalFn& a, const RationalFn& b, cplx sign) {
        const Polynomial& q = a.den_;
        const Polynomial& d = b.den_;
        if (q.degree() == 0 || d.degree() == 0)
            return RationalFn(a.num_ * d + sign * (b.num_ * q), q * d);
        std::vector<cplx> qr = roots(q), dr = roots(d);
        std::vector<bool> matched(qr.size(), false);
        std::vector<cplx> only_d;
        for (const cplx& x : dr) {
            bool hit = false;
            for (std::size_t i = 0; i < qr.size(); ++i)
                if (!matched[i] && roots_match(qr[i], x)) {
                    matched[i] = hit = true;
                    break;
                }
            if (!hit) only_d.push_back(x);
        }
        std::vector<cplx> only_q;
        for (std::size_t i = 0; i < qr.size(); ++i)
            if (!matched[i]) only_q.push_back(qr[i]);
        const Polynomial ext_d = Polynomial::from_roots(only_d, d.leading());
        const Polynomial ext_q = Polynomial::from_roots(only_q, cplx{1.0});
        return RationalFn(a.num_ * ext_d + sign * (b.num_ * ext_q), q * ext_d);
    }

    void reduce() {
        if (num_.is_zero()) {
            den_ = Polynomial::constant(1.0);
            return;
        }
        if (num_.degree() >= 1 && den_.degree() >= 1) {
            std::vector<cplx> nr = roots(num_);
            std::vector<cplx> dr = roots(den_);
            bool cancelled = false;
            for (auto it = dr.begin(); it != dr.end();) {
                bool hit = false;
                for (auto jt = nr.begin(); jt != nr.end(); ++jt) {
                    if (roots_match(*it, *jt)) {
                        nr.erase(jt);
                        it = dr.erase(it);
                        hit = cancelled = true;
                        break;
                    }
                }
                if (!hit) ++it;
            }
            if (cancelled) {
                const cplx lead = num_.leading() / den_.leading();
                num_ = Polynomial::from_roots(nr, lead);
                den_ = Polynomial::from_roots(dr, 1.0);
            }
        }
        // Monic denominator; fold its leading coefficient into the numerator.
        const cplx d = den_.leading();
        if (d != cplx{1.0}) {
            num_ = num_ * (cplx{1.0} / d);
            std::vector<cplx> dc = den_.coeffs();
            for (cplx& c : dc) c /= d;
            den_ = Polynomial(std::move(dc));
        }
    }

    Polynomial num_;
    Polynomial den_;
};

struct PartialFractions {
    struct Term {
        cplx pole;
        cplx residue;
        int multiplicity = 1;
    };
    Polynomial poly;  // polynomial part, nonzero only if deg num >= deg den
    std::vector<Term> terms;

    cplx eval(cplx s) const {
        cplx v = poly.eval(s);
        for (const Term& t : terms) v += t.residue / (s - t.pole);
        return v;
    }
};

/// Expansion into polynomial part plus first-order pole terms.
/// Repeated poles (within the clustering tolerance) are rejected.
inline PartialFractions partial_fractions(const RationalFn& f) {
    PartialFractions pf;
    if (f.is_zero()) return pf;

    auto [quot, rem] = f.num().divmod(f.den());
    pf.poly = quot;
    if (rem.is_zero() || f.den().degree() == 0) return pf;

    const std::vector<cplx> ps = roots(f.den());
    // A true double root is extracted as a pair split by O(sqrt(machine eps)),
    // so multiplicity detection needs a much wider net than exact matching.
    constexpr double kRepeatedPoleTol = 1e-7;
    for (std::size_t i = 0; i < ps.size(); ++i)
        for (std::size_t j = i + 1; j < ps.size(); ++j)
            if (std::abs(ps[i] - ps[j]) <=
                kRepeatedPoleTol * std::max(1.0, std::max(std::abs(ps[i]), std::abs(ps[j]))))
                throw unsupported_multiplicity_error("repeated pole in partial fractions");

    const Polynomial dden = f.den().derivative();
    for (const cplx& p : ps) {
        pf.terms.push_back({p, rem.eval(p) / dden.eval(p), 1});
    }
    return pf;
}

/// Rebuild a rational function from a set of first-order terms.
inline RationalFn from_terms(const Polynomial& poly, const std::vector<PartialFractions::Term>& terms) {
    RationalFn sum(poly, Polynomial::constant(1.0));
    for (const auto& t : terms) sum = sum + RationalFn::mode(t.residue, t.pole);
    return sum;
}

/// Additive decomposition f = causal + anticausal with the causal part holding
/// every pole with Re s < 0 plus the constant part, and the anticausal part
/// the Re s > 0 poles. Poles near the axis and strictly improper inputs are
/// rejected.
inline std::pair<RationalFn, RationalFn> causal_split(const RationalFn& f) {
    if (!f.proper())
        throw unsupported_error("causal split of a strictly improper function");
    PartialFractions pf = partial_fractions(f);
    std::vector<PartialFractions::Term> causal, anticausal;
    for (const auto& t : pf.terms) {
        if (pole_is_marginal(t.pole))
            throw marginal_pole_error("pole within tolerance of the imaginary axis");
        (t.pole.real() < 0.0 ? causal : anticausal).push_back(t);
    }
    return {from_terms(pf.poly, causal), from_terms(Polynomial{}, anticausal)};
}

}  // namespace cwiener

#endif
