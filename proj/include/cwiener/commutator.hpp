#ifndef CWIENER_COMMUTATOR_HPP
#define CWIENER_COMMUTATOR_HPP

#include <cmath>
#include <vector>

#include "cwiener/model.hpp"
#include "cwiener/rational.hpp"

namespace cwiener {

/// Two-time c-number kernel carried in closed exponential form:
///   K(tau) = sum_plus a_k exp(p_k tau)   for tau > 0  (Re p_k < 0)
///          = sum_minus b_k exp(q_k tau)  for tau < 0  (Re q_k > 0)
/// plus an optional delta weight at tau = 0. The value at tau = 0 is the
/// limit from the plus branch (causal filters take the full delta weight,
/// matching the constant-to-causal split in the rational layer).
struct Kernel {
    struct Term {
        cplx amp;
        cplx rate;
    };
    std::vector<Term> plus;
    std::vector<Term> minus;
    cplx delta_weight{0.0};

    cplx eval(double tau) const {
        cplx v = 0.0;
        if (tau >= 0.0) {
            for (const Term& t : plus) v += t.amp * std::exp(t.rate * tau);
        } else {
            for (const Term& t : minus) v += t.amp * std::exp(t.rate * tau);
        }
        return v;
    }

    Kernel flipped() const {  // K(-tau)
        Kernel k;
        for (const Term& t : plus) k.minus.push_back({t.amp, -t.rate});
        for (const Term& t : minus) k.plus.push_back({t.amp, -t.rate});
        k.delta_weight = delta_weight;
        return k;
    }

    friend Kernel operator+(const Kernel& a, const Kernel& b) {
        Kernel k = a;
        k.plus.insert(k.plus.end(), b.plus.begin(), b.plus.end());
        k.minus.insert(k.minus.end(), b.minus.begin(), b.minus.end());
        k.delta_weight += b.delta_weight;
        merge_terms(k.plus);
        merge_terms(k.minus);
        return k;
    }

    friend Kernel operator*(const Kernel& a, cplx c) {
        Kernel k = a;
        for (Term& t : k.plus) t.amp *= c;
        for (Term& t : k.minus) t.amp *= c;
        k.delta_weight *= c;
        return k;
    }

    static void merge_terms(std::vector<Term>& ts) {
        std::vector<Term> out;
        for (const Term& t : ts) {
            bool merged = false;
            for (Term& o : out) {
                if (std::abs(o.rate - t.rate) <= 1e-12 * std::max(1.0, std::abs(o.rate))) {
                    o.amp += t.amp;
                    merged = true;
                    break;
                }
            }
            if (!merged) out.push_back(t);
        }
        ts = std::move(out);
    }
};

/// Logarithmic two-sided lag grid: 256 points per sign in
/// [1e-3, 20]/Gamma_W, plus zero.
inline std::vector<double> tau_grid(double gamma_w) {
    const int n = 256;
    std::vector<double> g;
    g.reserve(2 * n + 1);
    const double lo = std::log10(1e-3 / gamma_w), hi = std::log10(20.0 / gamma_w);
    for (int k = n - 1; k >= 0; --k) g.push_back(-std::pow(10.0, lo + (hi - lo) * k / (n - 1.0)));
    g.push_back(0.0);
    for (int k = 0; k < n; ++k) g.push_back(std::pow(10.0, lo + (hi - lo) * k / (n - 1.0)));
    return g;
}

/// Impulse response of a proper causal (or deliberately anticausal) rational
/// filter: optional delta feedthrough plus exponential modes on one or both
/// half-lines.
struct ImpulseResponse {
    cplx delta{0.0};
    std::vector<Kernel::Term> plus;   // causal modes, Re rate < 0
    std::vector<Kernel::Term> minus;  // anticausal modes, Re rate > 0 (bypass only)

    static ImpulseResponse from_rational(const RationalFn& f) {
        ImpulseResponse h;
        if (f.is_zero()) return h;
        if (!f.proper()) throw unsupported_error("impulse response of an improper filter");
        PartialFractions pf = partial_fractions(f);
        if (pf.poly.degree() > 0)
            throw unsupported_error("impulse response with polynomial part above a constant");
        h.delta = pf.poly.eval(0.0);
        for (const auto& t : pf.terms) {
            if (t.pole.real() < 0.0)
                h.plus.push_back({t.residue, t.pole});
            else
                h.minus.push_back({t.residue, t.pole});
        }
        return h;
    }

    bool causal() const { return minus.empty(); }

    ImpulseResponse time_reversed() const {
        ImpulseResponse r;
        r.delta = delta;
        for (const auto& t : plus) r.minus.push_back({t.amp, -t.rate});
        for (const auto& t : minus) r.plus.push_back({t.amp, -t.rate});
        return r;
    }

    /// Lab-frame response of an envelope-domain filter: modes shifted to
    /// +-Omega0 so the filter passes the band the kernels oscillate in.
    /// h_lab(tau) = h_env(tau) e^{i W0 tau} + conj(h_env(tau)) e^{-i W0 tau},
    /// with the delta feedthrough kept once (real part doubled consistently
    /// only when h_env is real; complex envelopes keep both images).
    ImpulseResponse to_lab_frame(double omega0) const {
        ImpulseResponse r;
        r.delta = delta + std::conj(delta);
        const cplx iw{0.0, omega0};
        for (const auto& t : plus) {
            r.plus.push_back({t.amp, t.rate + iw});
            r.plus.push_back({std::conj(t.amp), std::conj(t.rate) - iw});
        }
        for (const auto& t : minus) {
            r.minus.push_back({t.amp, t.rate + iw});
            r.minus.push_back({std::conj(t.amp), std::conj(t.rate) - iw});
        }
        return r;
    }
};

namespace detail {

inline cplx safe_inv(cplx z) {
    if (std::abs(z) < 1e-9)
        throw unsupported_error("degenerate rate collision in exponential algebra");
    return 1.0 / z;
}

}  // namespace detail

/// integral_0^inf h(tau) K(tau) dtau, with the filter's delta weight taking
/// the full kernel value at tau = 0+ . Anticausal filter modes integrate the
/// tau < 0 branch instead.
inline cplx integrate_filter_against_kernel(const ImpulseResponse& h, const Kernel& K) {
    cplx v = h.delta * K.eval(0.0);
    for (const auto& f : h.plus)
        for (const auto& k : K.plus) v += -f.amp * k.amp * detail::safe_inv(f.rate + k.rate);
    for (const auto& f : h.minus)
        for (const auto& k : K.minus) v += f.amp * k.amp * detail::safe_inv(f.rate + k.rate);
    return v;
}

/// K_new(tau) = integral_0^inf h(sigma) K(tau + sigma) dsigma:
/// the cross-kernel of a filtered record, K_{A,(h*Y)}. Requires a causal h.
inline Kernel advance_convolve(const ImpulseResponse& h, const Kernel& K) {
    if (!h.causal()) throw usage_error("advance_convolve requires a causal filter");
    Kernel out;
    out = out + K * h.delta;
    for (const auto& f : h.plus) {
        for (const auto& k : K.plus) {
            const cplx w = -f.amp * k.amp * detail::safe_inv(f.rate + k.rate);
            out.plus.push_back({w, k.rate});    // tau >= 0: only the plus branch reached
            out.minus.push_back({w, -f.rate});  // tau < 0, sigma >= -tau region
        }
        for (const auto& k : K.minus) {
            // tau < 0, sigma in [0, -tau): the kernel's minus branch.
            const cplx w = f.amp * k.amp * detail::safe_inv(f.rate + k.rate);
            out.minus.push_back({w, -f.rate});
            out.minus.push_back({-w, k.rate});
        }
    }
    Kernel::merge_terms(out.plus);
    Kernel::merge_terms(out.minus);
    return out;
}

/// K_new(tau) = integral_0^inf h(sigma) K(tau - sigma) dsigma:
/// ordinary causal convolution, K_{(h*A),B}. Requires a causal h.
inline Kernel delay_convolve(const ImpulseResponse& h, const Kernel& K) {
    if (!h.causal()) throw usage_error("delay_convolve requires a causal filter");
    Kernel out;
    out = out + K * h.delta;
    for (const auto& f : h.plus) {
        for (const auto& k : K.plus) {
            // tau > 0, sigma in [0, tau).
            const cplx w = f.amp * k.amp * detail::safe_inv(f.rate - k.rate);
            out.plus.push_back({w, f.rate});
            out.plus.push_back({-w, k.rate});
        }
        for (const auto& k : K.minus) {
            const cplx w = f.amp * k.amp * detail::safe_inv(k.rate - f.rate);
            out.minus.push_back({w, k.rate});  // tau < 0: sigma ranges over all of [0, inf)
            out.plus.push_back({w, f.rate});   // tau > 0, sigma > tau region
        }
    }
    Kernel::merge_terms(out.plus);
    Kernel::merge_terms(out.minus);
    return out;
}

/// The model's commutator kernels. Conventions:
///  - K_xx(tau) = <[x(t), x(t+tau)]> = 2i x_zpf^2 sin(W0 tau) e^{-G0|tau|/2};
///    K_xp likewise with p(t+tau), so K_xp(0) = <[x,p]> = i hbar.
///  - The record cross kernels are indexed by the observable's lead over the
///    record: K_xy(tau) = <[x(t+tau), y(t)]>, which the measurement-causality
///    identity forces to vanish for all tau >= 0 once the back-action weight
///    is calibrated. The tau < 0 branch stays nonzero: the record does carry
///    information about the system's past.
struct KernelSet {
    Kernel K_xx, K_xp, K_xy, K_py, K_yy;
    cplx backaction_weight{0.0};
    double gamma_w = 1.0;  // lag-grid scale
};

namespace detail {

/// <[x(t+tau), x(t)]> = -2i x^2 sin(W0 tau) e^{-G0 |tau|/2}.
inline Kernel advanced_position_kernel(double x2, double omega0, double gamma0) {
    // -2i x^2 sin(W0 tau) e^{-G0|tau|/2} = -x^2 (e^{i W0 tau} - e^{-i W0 tau}) e^{-G0|tau|/2}.
    Kernel k;
    k.plus.push_back({cplx{-x2}, cplx{-gamma0 / 2.0, omega0}});
    k.plus.push_back({cplx{x2}, cplx{-gamma0 / 2.0, -omega0}});
    k.minus.push_back({cplx{-x2}, cplx{gamma0 / 2.0, omega0}});
    k.minus.push_back({cplx{x2}, cplx{gamma0 / 2.0, -omega0}});
    return k;
}

/// Kubo response kernel of displacement to force, theta(tau) sin(W0 tau)/(m W0)
/// with the structural-damping envelope.
inline Kernel response_kernel(double x2, double omega0, double gamma0) {
    // (2 x^2 / hbar) sin(W0 tau) e^{-G0 tau/2}, tau > 0 only.
    const cplx c{0.0, -x2 / hbar};  // (2/h) x^2 sin z = (x^2/h)(e^{iz}-e^{-iz})/i
    Kernel k;
    k.plus.push_back({c, cplx{-gamma0 / 2.0, omega0}});
    k.plus.push_back({-c, cplx{-gamma0 / 2.0, -omega0}});
    return k;
}

}  // namespace detail

/// Weight c of the canonical commutator between the back-action force and the
/// imprecision noise, solved (least squares over the positive lag grid) from
/// the requirement that <[x(t+tau), y(t)]> vanish for tau > 0. The unique
/// solution is i hbar; a residual above 1e-10 hbar signals a convention bug.
inline cplx calibrate_backaction(const SpectralModel& mdl) {
    if (!(mdl.rates.Gamma_meas > 0.0))
        throw no_information_error("calibration needs Gamma_meas > 0");
    const double x2 = mdl.rates.x_zpf * mdl.rates.x_zpf;
    const Kernel G = detail::advanced_position_kernel(x2, mdl.params.Omega0, mdl.rates.Gamma0);
    const Kernel R = detail::response_kernel(x2, mdl.params.Omega0, mdl.rates.Gamma0);

    cplx num = 0.0;
    double den = 0.0;
    for (double t : tau_grid(mdl.rates.Gamma_W)) {
        if (t <= 0.0) continue;
        const cplx r = R.eval(t);
        num += std::conj(r) * G.eval(t);
        den += std::norm(r);
    }
    if (den == 0.0) throw model_inconsistency_error("response kernel vanished on the lag grid");
    const cplx c = -num / den;

    double resid = 0.0;
    for (double t : tau_grid(mdl.rates.Gamma_W)) {
        if (t <= 0.0) continue;
        resid = std::max(resid, std::abs(G.eval(t) + c * R.eval(t)));
    }
    if (resid > 1e-10 * hbar)
        throw model_inconsistency_error("back-action calibration failed to cancel the forward branch");
    return c;
}

/// Assemble all kernels for a calibrated model.
inline KernelSet build_kernels(const SpectralModel& mdl, cplx backaction_weight) {
    const double x2 = mdl.rates.x_zpf * mdl.rates.x_zpf;
    const double W0 = mdl.params.Omega0;
    const double G0 = mdl.rates.Gamma0;
    const cplx c = backaction_weight;

    KernelSet ks;
    ks.backaction_weight = c;
    ks.gamma_w = mdl.rates.Gamma_W;

    const Kernel G = detail::advanced_position_kernel(x2, W0, G0);  // <[x(t+tau), x(t)]>
    const Kernel R = detail::response_kernel(x2, W0, G0);

    ks.K_xx = G.flipped();  // <[x(t), x(t+tau)]> = 2i x^2 sin(W0 tau) e^{-G0|tau|/2}
    Kernel xp = ks.K_xx;    // K_xp = m d/dtau K_xx
    for (auto& t : xp.plus) t.amp *= mdl.params.m * t.rate;
    for (auto& t : xp.minus) t.amp *= mdl.params.m * t.rate;
    ks.K_xp = xp;

    ks.K_xy = G + R * c;
    Kernel py = ks.K_xy;  // K_py = m d/dtau K_xy (momentum leads the record)
    for (auto& t : py.plus) t.amp *= mdl.params.m * t.rate;
    for (auto& t : py.minus) t.amp *= mdl.params.m * t.rate;
    ks.K_py = py;

    ks.K_yy = G + R * c + (R * c).flipped() * cplx{-1.0};
    return ks;
}

/// Grid maxima used by the verification report.
inline double max_abs_on_grid(const Kernel& k, double gamma_w, bool positive_lags_only = false) {
    double m = 0.0;
    for (double t : tau_grid(gamma_w)) {
        if (positive_lags_only && t < 0.0) continue;
        m = std::max(m, std::abs(k.eval(t)));
    }
    return m;
}

/// C(u) = int wx(a) wp(a + u) da, returned in the same delta-plus-modes
/// representation (so it can be paired against a kernel with
/// integrate_filter_against_kernel). Supports anticausal modes on either
/// input; throws on a degenerate rate cancellation.
inline ImpulseResponse cross_correlation(const ImpulseResponse& wx, const ImpulseResponse& wp) {
    ImpulseResponse c;
    c.delta = wx.delta * wp.delta;
    // Delta feedthrough of one filter picks out the other's response.
    for (const auto& t : wp.plus) c.plus.push_back({wx.delta * t.amp, t.rate});
    for (const auto& t : wp.minus) c.minus.push_back({wx.delta * t.amp, t.rate});
    for (const auto& t : wx.plus) c.minus.push_back({wp.delta * t.amp, -t.rate});
    for (const auto& t : wx.minus) c.plus.push_back({wp.delta * t.amp, -t.rate});

    for (const auto& t1 : wx.plus) {
        for (const auto& t2 : wp.plus) {
            const cplx w = -t1.amp * t2.amp * detail::safe_inv(t1.rate + t2.rate);
            c.plus.push_back({w, t2.rate});
            c.minus.push_back({w, -t1.rate});
        }
        for (const auto& t2 : wp.minus) {  // overlap only for u < 0, a in (0, -u)
            const cplx w = t1.amp * t2.amp * detail::safe_inv(t1.rate + t2.rate);
            c.minus.push_back({w, -t1.rate});
            c.minus.push_back({-w, t2.rate});
        }
    }
    for (const auto& t1 : wx.minus) {
        for (const auto& t2 : wp.plus) {  // overlap only for u > 0, a in (-u, 0)
            const cplx w = t1.amp * t2.amp * detail::safe_inv(t1.rate + t2.rate);
            c.plus.push_back({w, t2.rate});
            c.plus.push_back({-w, -t1.rate});
        }
        for (const auto& t2 : wp.minus) {
            const cplx w = t1.amp * t2.amp * detail::safe_inv(t1.rate + t2.rate);
            c.plus.push_back({w, -t1.rate});
            c.minus.push_back({w, t2.rate});
        }
    }
    return c;
}

struct ErrorCommutatorResult {
    cplx value{0.0};          // <[Delta x, Delta p]>, expected i hbar
    cplx cross_xp{0.0};       // <[x, p_e]> term
    cplx cross_ex{0.0};       // <[x_e, p]> term
    cplx estimator_term{0.0}; // <[x_e, p_e]> term
};

/// Assemble <[Delta x, Delta p]> = <[x,p]> - <[x, p_e]> - <[x_e, p]> + <[x_e, p_e]>
/// from the kernels and a pair of filters given as lab-frame impulse responses.
/// Filters must be causal unless bypass_causality_check is set (the bypass
/// exists to demonstrate the violation, not to compute anything trustworthy).
inline ErrorCommutatorResult error_commutator(const KernelSet& ks, const ImpulseResponse& wx_lab,
                                              const ImpulseResponse& wp_lab,
                                              bool bypass_causality_check = false) {
    if (!bypass_causality_check && (!wx_lab.causal() || !wp_lab.causal()))
        throw usage_error("error_commutator hypothesis requires causal filters");

    ErrorCommutatorResult res;
    // <[x(t), p_e(t)]> = int W_p(tau) <[x(t), y(t-tau)]> dtau; the kernel
    // <[x(t), y(t-tau)]> is exactly K_xy(tau) in our indexing.
    res.cross_xp = integrate_filter_against_kernel(wp_lab, ks.K_xy);
    // <[x_e(t), p(t)]> = -int W_x(tau) K_py(tau) dtau.
    res.cross_ex = -integrate_filter_against_kernel(wx_lab, ks.K_py);

    // <[x_e, p_e]> = int int W_x(a) W_p(b) K_yy(b - a) da db
    //             = int C(u) K_yy(u) du with C the cross-correlation below.
    res.estimator_term = integrate_filter_against_kernel(cross_correlation(wx_lab, wp_lab), ks.K_yy);

    res.value = ks.K_xp.eval(0.0) - res.cross_xp - res.cross_ex + res.estimator_term;
    return res;
}

}  // namespace cwiener

#endif
