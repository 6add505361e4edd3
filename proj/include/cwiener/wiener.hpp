#ifndef CWIENER_WIENER_HPP
#define CWIENER_WIENER_HPP

#include <cmath>

#include "cwiener/model.hpp"

namespace cwiener {

enum class Observable { position, momentum };

/// Causal Wiener filter for one observable, with the spectral machinery that
/// produced it and the resulting error statistics.
struct WienerSolution {
    Observable observable = Observable::position;
    RationalFn W;             // causal filter acting on the record
    SpectralFactors factors;  // of Syy
    RationalFn causal_part;   // [S_xy / S_y^-]_+
    Psd error_spectrum;       // S_xx - causal_part * conj_reflect(causal_part)
    double error_variance = 0.0;
};

/// Error spectrum of an arbitrary causal filter V applied to the record:
/// S_xx - V S_yx - conj_reflect(V) S_xy + V conj_reflect(V) S_yy.
/// Used as the independent optimality oracle for the synthesized filter.
inline RationalFn error_spectrum_of_filter(const SpectralModel& mdl, const RationalFn& V) {
    const RationalFn Syx = mdl.Sxy.conj_reflect();
    return RationalFn(mdl.Sxx.f) - V * Syx - V.conj_reflect() * mdl.Sxy +
           V * V.conj_reflect() * RationalFn(mdl.Syy.f);
}

inline double error_variance_of_filter(const SpectralModel& mdl, const RationalFn& V) {
    return integrate_psd(Psd(error_spectrum_of_filter(mdl, V), mdl.rates.Gamma_W));
}

/// Causal Wiener synthesis: factorize S_yy, project S_xy / S_y^- onto its
/// causal part, divide by S_y^+. The momentum solution reuses the position
/// one through W_p = i m Omega0 W_x (the near-resonance momentum relation).
inline WienerSolution synthesize(const SpectralModel& mdl, Observable obs) {
    if (!(mdl.rates.Gamma_meas > 0.0))
        throw no_information_error("Wiener synthesis needs Gamma_meas > 0");

    WienerSolution sol;
    sol.observable = obs;
    sol.factors = factorize(mdl.Syy);

    const RationalFn ratio = mdl.Sxy / sol.factors.minus;
    sol.causal_part = causal_split(ratio).first;
    sol.W = sol.causal_part / sol.factors.plus;

    RationalFn Sll = mdl.Sxx.f;
    if (obs == Observable::momentum) {
        const cplx ip{0.0, mdl.params.m * mdl.params.Omega0};
        sol.causal_part = sol.causal_part * ip;
        sol.W = sol.W * ip;
        Sll = Sll * cplx{std::norm(ip)};
    }

    const RationalFn spec = Sll - sol.causal_part * sol.causal_part.conj_reflect();
    sol.error_spectrum = Psd(spec, mdl.rates.Gamma_W);
    sol.error_variance = integrate_psd(sol.error_spectrum);
    return sol;
}

/// Closed-form variance 4 x_zpf^2 (Gamma_meas + Gamma_th) / (Gamma0 + 2 Gamma_W),
/// the independent oracle for the numerical pipeline (position; momentum is
/// the same in p_zpf^2 units).
inline double sigma_dx2_closed_form(const DerivedRates& r) {
    return r.x_zpf * r.x_zpf * 4.0 * (r.Gamma_meas + r.Gamma_th) / (r.Gamma0 + 2.0 * r.Gamma_W);
}

/// Cross error spectrum S_{Delta x_l, Delta x_l'} for l != l':
/// S_{x_l x_l'} - conj_reflect([S_{x_l y}/S_y^-]_+) * [S_{x_l' y}/S_y^-]_+.
/// For (x, p) near resonance this is i m Omega0 times the position error
/// spectrum, purely imaginary on the axis.
inline RationalFn error_cross_spectrum(const WienerSolution& sol_x, const WienerSolution& sol_p,
                                       const SpectralModel& mdl) {
    if (sol_x.observable != Observable::position || sol_p.observable != Observable::momentum)
        throw usage_error("error_cross_spectrum expects (position, momentum) solutions");
    const cplx ip{0.0, mdl.params.m * mdl.params.Omega0};
    const RationalFn Sxp = RationalFn(mdl.Sxx.f) * ip;  // S_xp = i m Omega0 S_xx
    return Sxp - sol_x.causal_part.conj_reflect() * sol_p.causal_part;
}

/// Symmetrized covariance: integral of the real part of the cross spectrum.
inline double symmetrized_covariance(const RationalFn& cross) {
    const RationalFn re_part = (cross + cross.conj_reflect()) * cplx{0.5};
    if (re_part.is_zero()) return 0.0;
    PartialFractions pf = partial_fractions(re_part);
    cplx sum = 0.0;
    for (const auto& t : pf.terms)
        if (t.pole.real() < 0.0) sum += t.residue;
    return sum.real();
}

struct UncertaintyReport {
    double sigma_dx2 = 0.0;       // in absolute units
    double sigma_dp2 = 0.0;
    double sigma_dxdp_sym = 0.0;  // symmetrized cross covariance
    double product = 0.0;         // sigma_dx2 * sigma_dp2
    double heisenberg_floor = hbar * hbar / 4.0;
    double thermal_ceiling = 0.0;  // (2 n_th + 1)^2 hbar^2 / 4
};

inline UncertaintyReport uncertainty_product(const SpectralModel& mdl) {
    UncertaintyReport rep;
    const WienerSolution sx = synthesize(mdl, Observable::position);
    const WienerSolution sp = synthesize(mdl, Observable::momentum);
    rep.sigma_dx2 = sx.error_variance;
    rep.sigma_dp2 = sp.error_variance;
    rep.sigma_dxdp_sym = symmetrized_covariance(error_cross_spectrum(sx, sp, mdl));
    rep.product = rep.sigma_dx2 * rep.sigma_dp2;
    const double n = mdl.params.n_th;
    rep.thermal_ceiling = (2.0 * n + 1.0) * (2.0 * n + 1.0) * hbar * hbar / 4.0;
    return rep;
}

}  // namespace cwiener

#endif
