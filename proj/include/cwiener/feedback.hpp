#ifndef CWIENER_FEEDBACK_HPP
#define CWIENER_FEEDBACK_HPP

#include <sstream>
#include <vector>

#include "cwiener/commutator.hpp"
#include "cwiener/wiener.hpp"

namespace cwiener {

/// Feedback loop around the measurement: M is the plant path from controller
/// output to record, K the controller. The setpoint is fixed to zero.
struct LoopModel {
    RationalFn M;
    RationalFn K;
};

/// Loop transfer K_c = 1/(1 - M K), relating the in-loop record to the
/// open-loop one: Y_c = K_c * Y_o. Verified stable and causal; an unstable
/// closed loop throws with the offending poles listed.
inline RationalFn closed_loop(const LoopModel& loop) {
    if (!loop.M.causal() || !loop.K.causal())
        throw usage_error("loop plant and controller must be causal");
    const RationalFn one = RationalFn::constant(1.0);
    const RationalFn denom = one - loop.M * loop.K;
    if (denom.is_zero()) throw usage_error("1 - M K vanishes identically");
    const RationalFn kc = one / denom;
    std::vector<cplx> bad;
    for (const cplx& p : kc.poles())
        if (p.real() >= 0.0) bad.push_back(p);
    if (!bad.empty()) {
        std::ostringstream os;
        os << "closed loop unstable; poles with Re >= 0:";
        for (const cplx& p : bad) os << " (" << p.real() << ", " << p.imag() << ")";
        throw instability_error(os.str());
    }
    return kc;
}

/// In-loop estimation filter W_c = (1 - W_o M) K + W_o, equal to
/// W_o / K_c + K. Both forms are evaluated and asserted to agree; the
/// expanded form is returned.
inline RationalFn inloop_filter(const RationalFn& W_o, const LoopModel& loop) {
    if (!W_o.causal()) throw usage_error("open-loop filter must be causal and stable");
    const RationalFn kc = closed_loop(loop);  // also validates the loop
    const RationalFn one = RationalFn::constant(1.0);
    const RationalFn expanded = (one - W_o * loop.M) * loop.K + W_o;
    const RationalFn divided = W_o / kc + loop.K;
    const double width = std::max(characteristic_width(expanded), characteristic_width(kc));
    for (double w : {0.13 * width, 1.7 * width, 41.0 * width}) {
        const cplx a = expanded.eval(cplx{0.0, w});
        const cplx b = divided.eval(cplx{0.0, w});
        if (std::abs(a - b) > 1e-8 * (1.0 + std::abs(a)))
            throw error("in-loop filter forms disagree; loop algebra is inconsistent");
    }
    if (!expanded.causal()) throw instability_error("in-loop filter came out non-causal");
    return expanded;
}

/// Error spectrum of filtering the in-loop record with W_c, computed without
/// invoking the equivalence theorem: with Y_c = K_c Y_o and the observable
/// picking up the feedback term K Y_c, the effective open-loop filter is
/// (W_c - K) K_c.
inline double inloop_error_spectrum(const SpectralModel& mdl, const LoopModel& loop,
                                    const RationalFn& W_c, double omega) {
    const RationalFn kc = closed_loop(loop);
    const RationalFn effective = (W_c - loop.K) * kc;
    return error_spectrum_of_filter(mdl, effective).eval(cplx{0.0, omega}).real();
}

struct SquashingReport {
    std::vector<double> omega;   // probe grid (offset from resonance)
    std::vector<double> S_yc;    // in-loop record spectrum |K_c|^2 S_yo
    std::vector<double> S_yo;    // open-loop record spectrum
    std::vector<double> S_err_c; // in-loop estimation-error spectrum
    std::vector<double> S_err_o; // open-loop estimation-error spectrum
    bool squashed_anywhere = false;   // S_yc dips below the imprecision floor
    double max_error_deviation = 0.0; // max |S_err_c - S_err_o| / max(S_err_o)
};

/// Noise-squashing diagnostic: the in-loop record spectrum may drop below the
/// imprecision floor, while the estimation-error spectrum is unchanged.
inline SquashingReport squashing_report(const SpectralModel& mdl, const LoopModel& loop,
                                        const WienerSolution& sol_o) {
    SquashingReport rep;
    const RationalFn kc = closed_loop(loop);
    const RationalFn W_c = inloop_filter(sol_o.W, loop);
    const RationalFn effective = (W_c - loop.K) * kc;
    const RationalFn err_c = error_spectrum_of_filter(mdl, effective);
    const RationalFn err_o = error_spectrum_of_filter(mdl, sol_o.W);

    rep.omega = probe_grid(mdl.rates.Gamma_W);
    double err_peak = 0.0;
    for (double w : rep.omega) {
        const cplx s{0.0, w};
        const double syo = mdl.Syy.eval(w);
        const double syc = std::norm(kc.eval(s)) * syo;
        rep.S_yo.push_back(syo);
        rep.S_yc.push_back(syc);
        if (syc < mdl.S_imp * (1.0 - 1e-9)) rep.squashed_anywhere = true;
        const double ec = err_c.eval(s).real();
        const double eo = err_o.eval(s).real();
        rep.S_err_c.push_back(ec);
        rep.S_err_o.push_back(eo);
        err_peak = std::max(err_peak, std::abs(eo));
    }
    for (std::size_t i = 0; i < rep.omega.size(); ++i)
        rep.max_error_deviation =
            std::max(rep.max_error_deviation, std::abs(rep.S_err_c[i] - rep.S_err_o[i]) / err_peak);
    return rep;
}

/// In-loop momentum filter. The loop actuates the position observable only,
/// so the momentum estimate just has to undo the record recoloring:
/// W_cp = W_op / K_c = W_op (1 - M K), causal and stable with the loop.
inline RationalFn inloop_filter_momentum(const RationalFn& W_op, const LoopModel& loop) {
    if (!W_op.causal()) throw usage_error("open-loop filter must be causal and stable");
    (void)closed_loop(loop);  // validates stability
    const RationalFn w = W_op * (RationalFn::constant(1.0) - loop.M * loop.K);
    if (!w.causal()) throw instability_error("in-loop momentum filter came out non-causal");
    return w;
}

/// Kernels of the open-loop observables against the in-loop record
/// y_c = K_c * y_o. The record-record kernel is transformed on both slots;
/// with a commuting open-loop record it stays identically zero, so the
/// in-loop record commutes with itself too.
inline KernelSet inloop_kernels(const KernelSet& ks, const LoopModel& loop, double omega0) {
    const RationalFn kc = closed_loop(loop);
    const ImpulseResponse kc_lab = ImpulseResponse::from_rational(kc).to_lab_frame(omega0);
    KernelSet out = ks;
    out.K_xy = advance_convolve(kc_lab, ks.K_xy);
    out.K_py = advance_convolve(kc_lab, ks.K_py);
    out.K_yy = delay_convolve(kc_lab, advance_convolve(kc_lab, ks.K_yy));
    return out;
}

/// <[dx_c, dp_c]> for in-loop estimation, computed from first principles
/// rather than via the open-loop equivalence. The loop adds K*y_c to the
/// position observable; the momentum observable is left unactuated. The
/// in-loop estimates W_cx*y_c and W_cp*y_c then decompose as
///   dx_c = x_o - (W_cx - K) y_c,   dp_c = p_o - W_cp y_c,
/// with both effective filters causal whenever the loop is stable, so the
/// open-loop commutator assembly applies verbatim with in-loop kernels.
inline ErrorCommutatorResult inloop_error_commutator(const KernelSet& ks, const LoopModel& loop,
                                                     const WienerSolution& sol_x,
                                                     const WienerSolution& sol_p, double omega0) {
    const RationalFn W_cx = inloop_filter(sol_x.W, loop);
    const RationalFn W_cp = inloop_filter_momentum(sol_p.W, loop);
    const RationalFn V_x = W_cx - loop.K;
    const RationalFn& V_p = W_cp;
    if (!V_x.causal() || !V_p.causal())
        throw instability_error("effective in-loop error filters came out non-causal");
    const KernelSet ksc = inloop_kernels(ks, loop, omega0);
    const ImpulseResponse wx_lab = ImpulseResponse::from_rational(V_x).to_lab_frame(omega0);
    const ImpulseResponse wp_lab = ImpulseResponse::from_rational(V_p).to_lab_frame(omega0);
    return error_commutator(ksc, wx_lab, wp_lab);
}

}  // namespace cwiener

#endif
