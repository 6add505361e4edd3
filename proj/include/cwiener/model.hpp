#ifndef CWIENER_MODEL_HPP
#define CWIENER_MODEL_HPP

#include <cmath>
#include <optional>

#include "cwiener/spectral.hpp"

namespace cwiener {

// Internal unit system: hbar = kB = 1; masses/frequencies in the caller's
// consistent units. Displacements are reported in x_zpf units, momenta in
// p_zpf units throughout the higher-level modules.
constexpr double hbar = 1.0;
constexpr double kB = 1.0;

/// Physical parameters of a structurally damped oscillator read out by a
/// bad-cavity interferometer.
struct OscMeasParams {
    double m = 1.0;        // mass
    double Omega0 = 1.0;   // resonance frequency (rad/s)
    double phi0 = 0.0;     // Zener loss-angle amplitude
    double tau = 1.0;      // Zener relaxation time
    double n_th = 0.0;     // bath occupancy at resonance (dimensionless)
    double g = 0.0;        // multi-photon optomechanical coupling (rad/s)
    double kappa = 1.0;    // cavity linewidth (rad/s)
    double eta = 1.0;      // detection efficiency, (0, 1]
    std::optional<double> T;  // bath temperature; when set, n_th[Omega] is Bose

    void validate() const {
        if (!(m > 0.0) || !(Omega0 > 0.0) || !(kappa > 0.0))
            throw config_error("m, Omega0 and kappa must be positive");
        if (g < 0.0 || n_th < 0.0) throw config_error("g and n_th must be non-negative");
        if (!(eta > 0.0) || eta > 1.0) throw config_error("eta must lie in (0, 1]");
        if (!(tau > 0.0)) throw config_error("tau must be positive");
    }

    bool bad_cavity() const { return kappa >= 10.0 * Omega0; }

    /// Convenience constructor from rates, for sweeps in Gamma0-referred
    /// units: picks tau = 1/Omega0 (loss peak at resonance) and a bad-cavity
    /// kappa, then back-solves phi0 and g.
    static OscMeasParams from_rates(double gamma0, double n_th, double gamma_meas,
                                    double omega0 = 5000.0, double eta = 1.0) {
        OscMeasParams p;
        p.m = 1.0;
        p.Omega0 = omega0;
        p.tau = 1.0 / omega0;
        p.phi0 = 2.0 * gamma0 / omega0;  // phi[Omega0] = phi0/2 at tau = 1/Omega0
        p.n_th = n_th;
        p.kappa = 100.0 * omega0;
        p.g = std::sqrt(std::max(0.0, gamma_meas) * p.kappa / 4.0);
        p.eta = eta;
        p.validate();
        return p;
    }
};

/// Zener loss angle phi0 * (Omega tau) / (1 + (Omega tau)^2). Odd in Omega,
/// peaks at phi0/2 when Omega = 1/tau.
inline double zener_phi(double Omega, double phi0, double tau) {
    if (!(tau > 0.0)) throw config_error("zener_phi requires tau > 0");
    const double u = Omega * tau;
    return phi0 * u / (1.0 + u * u);
}

/// Mechanical susceptibility of the structurally damped oscillator,
/// 1 / (m (-Omega^2 + Omega0^2 + i Omega0^2 phi[Omega])).
inline cplx structural_chi(double Omega, const OscMeasParams& p) {
    const double phi = zener_phi(Omega, p.phi0, p.tau);
    const cplx den = p.m * cplx{p.Omega0 * p.Omega0 - Omega * Omega, p.Omega0 * p.Omega0 * phi};
    if (std::abs(den) == 0.0) throw pole_evaluation_error("structural_chi: zero denominator");
    return 1.0 / den;
}

/// Bose occupancy 1/(exp(hbar Omega / kB T) - 1).
inline double bose_occupancy(double Omega, double T) {
    if (!(T > 0.0)) return 0.0;
    const double x = hbar * Omega / (kB * T);
    if (x == 0.0) throw divergence_error("Bose occupancy diverges at Omega = 0");
    return 1.0 / std::expm1(x);
}

/// Thermal displacement density from the fluctuation-dissipation theorem,
/// 2 hbar (n_th[Omega] + 1/2) Im chi[Omega], evaluated pointwise.
/// The loss term enters structural_chi with the Fourier sign that puts the
/// dissipative part of chi in the lower half; the density takes the
/// dissipative (positive for Omega > 0) branch of Im chi.
inline double thermal_psd_fdt(double Omega, const OscMeasParams& p) {
    double n;
    if (p.T.has_value()) {
        if (Omega == 0.0) throw divergence_error("thermal density diverges at Omega = 0 for T > 0");
        n = bose_occupancy(Omega, *p.T);
    } else {
        n = p.n_th;
    }
    return -2.0 * hbar * (n + 0.5) * structural_chi(Omega, p).imag();
}

struct DerivedRates {
    double Gamma0 = 0.0;      // Omega0 * phi[Omega0]
    double Gamma_th = 0.0;    // Gamma0 (n_th + 1/2)
    double Gamma_meas = 0.0;  // 4 g^2 / kappa
    double n_meas = 0.0;      // Gamma_meas / Gamma0
    double Gamma_W = 0.0;     // sqrt(4 G_th G_m + 4 G_m^2 + (G_0/2)^2)
    double x_zpf = 0.0;       // sqrt(hbar / 2 m Omega0)
    double p_zpf = 0.0;       // hbar / (2 x_zpf)
};

inline DerivedRates derive_rates(const OscMeasParams& p) {
    p.validate();
    DerivedRates r;
    r.Gamma0 = p.Omega0 * zener_phi(p.Omega0, p.phi0, p.tau);
    r.Gamma_th = r.Gamma0 * (p.n_th + 0.5);
    r.Gamma_meas = 4.0 * p.g * p.g / p.kappa;
    r.n_meas = r.Gamma0 > 0.0 ? r.Gamma_meas / r.Gamma0 : 0.0;
    r.Gamma_W = std::sqrt(4.0 * r.Gamma_th * r.Gamma_meas + 4.0 * r.Gamma_meas * r.Gamma_meas +
                          0.25 * r.Gamma0 * r.Gamma0);
    r.x_zpf = std::sqrt(hbar / (2.0 * p.m * p.Omega0));
    r.p_zpf = hbar / (2.0 * r.x_zpf);
    return r;
}

/// Near-resonance cross-spectral description of the (displacement, record)
/// pair, as rational functions of s = i*delta, delta = Omega - Omega0.
struct SpectralModel {
    Psd Sxx;          // signal density, Lorentzian of half width Gamma0/2
    RationalFn Sxy;   // equals Sxx for this readout
    Psd Syy;          // record density, Sxx + S_imp
    double S_imp = 0.0;  // white imprecision floor, x_zpf^2 / (2 eta Gamma_meas)
    DerivedRates rates;
    OscMeasParams params;
    bool near_resonance_valid = true;  // Gamma0, Gamma_W << Omega0
};

inline SpectralModel near_resonance_model(const OscMeasParams& p) {
    const DerivedRates r = derive_rates(p);
    if (!(r.Gamma_meas > 0.0))
        throw no_information_error("Gamma_meas must be positive: record carries no signal");

    SpectralModel mdl;
    mdl.params = p;
    mdl.rates = r;
    mdl.near_resonance_valid = (r.Gamma0 < 0.1 * p.Omega0) && (r.Gamma_W < 0.1 * p.Omega0);

    const double x2 = r.x_zpf * r.x_zpf;
    const double A = 2.0 * x2 * (r.Gamma_th + r.Gamma_meas);
    const double gam = 0.5 * r.Gamma0;
    // A / (gam^2 - s^2) == A / (delta^2 + gam^2) on s = i delta.
    RationalFn lorentz(Polynomial{cplx{A}}, Polynomial{cplx{gam * gam}, 0.0, cplx{-1.0}});
    mdl.Sxx = Psd(lorentz, r.Gamma_W);
    mdl.Sxy = lorentz;
    mdl.S_imp = x2 / (2.0 * p.eta * r.Gamma_meas);
    mdl.Syy = Psd(lorentz + RationalFn::constant(mdl.S_imp), r.Gamma_W);
    return mdl;
}

}  // namespace cwiener

#endif
