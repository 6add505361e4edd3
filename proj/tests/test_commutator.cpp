#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "cwiener/commutator.hpp"
#include "cwiener/wiener.hpp"

using namespace cwiener;

namespace {

SpectralModel e1() { return near_resonance_model(OscMeasParams::from_rates(1.0, 0.0, 1.0)); }

// Smooth (delta-free) value of an impulse response at u != 0.
cplx ir_eval(const ImpulseResponse& h, double u) {
    cplx v = 0.0;
    if (u > 0.0)
        for (const auto& t : h.plus) v += t.amp * std::exp(t.rate * u);
    else
        for (const auto& t : h.minus) v += t.amp * std::exp(t.rate * u);
    return v;
}

// Analytic continuation of one branch's mode sum (used so the numeric
// integrals can be split at the branch points, keeping every integrand
// smooth and Simpson's rule accurate).
cplx branch_sum(const std::vector<Kernel::Term>& ts, double u) {
    cplx v = 0.0;
    for (const auto& t : ts) v += t.amp * std::exp(t.rate * u);
    return v;
}

// Composite Simpson over [a, b].
template <class F>
cplx simpson(F f, double a, double b, int n) {
    const double dh = (b - a) / n;
    cplx acc = f(a) + f(b);
    for (int k = 1; k < n; ++k) acc += f(a + k * dh) * (k % 2 ? 4.0 : 2.0);
    return acc * (dh / 3.0);
}

// Piecewise-smooth integral of f over [lo, hi] split at the given points;
// f receives the segment midpoint as a second argument so it can pick the
// right branches.
template <class F>
cplx split_integral(F f, double lo, double hi, std::vector<double> cuts, int n) {
    cuts.push_back(lo);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    cplx acc = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = std::max(lo, cuts[k]), b = std::min(hi, cuts[k + 1]);
        if (b - a < 1e-14) continue;
        const double mid = 0.5 * (a + b);
        acc += simpson([&](double u) { return f(u, mid); }, a, b, n);
    }
    return acc;
}

}  // namespace

TEST_CASE("kernel conventions") {
    SpectralModel mdl = e1();
    KernelSet ks = build_kernels(mdl, calibrate_backaction(mdl));
    const double x2 = mdl.rates.x_zpf * mdl.rates.x_zpf;
    const double W0 = mdl.params.Omega0;

    SECTION("position autocommutator") {
        for (double tau : {0.3, -0.7, 1.9}) {
            const cplx want =
                cplx{0.0, 2.0 * x2} * std::sin(W0 * tau) * std::exp(-0.5 * std::abs(tau));
            CHECK(std::abs(ks.K_xx.eval(tau) - want) < 1e-15);
        }
        CHECK(std::abs(ks.K_xx.eval(0.0)) < 1e-18);
    }
    SECTION("equal-time canonical commutator") {
        CHECK(std::abs(ks.K_xp.eval(0.0) - cplx{0.0, hbar}) < 1e-12 * hbar);
    }
    SECTION("record commutes with itself") {
        CHECK(max_abs_on_grid(ks.K_yy, ks.gamma_w) < 1e-12 * hbar);
    }
    SECTION("record commutes with the system's future, not its past") {
        CHECK(max_abs_on_grid(ks.K_xy, ks.gamma_w, true) < 1e-12 * hbar);
        CHECK(max_abs_on_grid(ks.K_py, ks.gamma_w, true) < 1e-8 * hbar);
        double past = 0.0;
        for (double t : tau_grid(ks.gamma_w))
            if (t < 0.0) past = std::max(past, std::abs(ks.K_xy.eval(t)));
        CHECK(past > 1e-5 * hbar);
    }
}

TEST_CASE("back-action weight calibrates to i hbar") {
    for (double ratio : {0.1, 1.0, 50.0}) {
        SpectralModel mdl = near_resonance_model(OscMeasParams::from_rates(1.0, 2.0, ratio));
        const cplx c = calibrate_backaction(mdl);
        CHECK(std::abs(c - cplx{0.0, hbar}) < 1e-10 * hbar);
    }
}

TEST_CASE("exponential algebra against numeric integration") {
    ImpulseResponse h;
    h.delta = cplx{0.3, -0.1};
    h.plus.push_back({cplx{1.0, 0.4}, cplx{-1.0, 2.0}});
    h.plus.push_back({cplx{-0.2, 0.1}, cplx{-0.6, -1.3}});

    Kernel K;
    K.plus.push_back({cplx{0.7, 0.2}, cplx{-0.8, 1.1}});
    K.minus.push_back({cplx{-0.4, 0.5}, cplx{0.9, -0.3}});

    const double L = 80.0;
    const int n = 20000;

    SECTION("half-line pairing integral") {
        const cplx got = integrate_filter_against_kernel(h, K);
        cplx want = h.delta * K.eval(0.0);
        want += simpson([&](double t) { return branch_sum(h.plus, t) * branch_sum(K.plus, t); },
                        0.0, L, n);
        CHECK(std::abs(got - want) < 1e-9);
    }
    SECTION("advance convolution") {
        const Kernel out = advance_convolve(h, K);
        for (double tau : {1.3, 0.2, -0.4, -3.0}) {
            cplx want = h.delta * K.eval(tau);
            want += split_integral(
                [&](double s, double mid) {
                    const auto& kb = (tau + mid >= 0.0) ? K.plus : K.minus;
                    return branch_sum(h.plus, s) * branch_sum(kb, tau + s);
                },
                0.0, L, {-tau}, n);
            CHECK(std::abs(out.eval(tau) - want) < 1e-9);
        }
    }
    SECTION("delay convolution") {
        const Kernel out = delay_convolve(h, K);
        for (double tau : {2.1, 0.5, -0.8, -4.0}) {
            cplx want = h.delta * K.eval(tau);
            want += split_integral(
                [&](double s, double mid) {
                    const auto& kb = (tau - mid >= 0.0) ? K.plus : K.minus;
                    return branch_sum(h.plus, s) * branch_sum(kb, tau - s);
                },
                0.0, L, {tau}, n);
            CHECK(std::abs(out.eval(tau) - want) < 1e-9);
        }
    }
    SECTION("convolutions reject anticausal filters") {
        ImpulseResponse bad = h.time_reversed();
        CHECK_THROWS_AS(advance_convolve(bad, K), usage_error);
        CHECK_THROWS_AS(delay_convolve(bad, K), usage_error);
    }
}

TEST_CASE("cross correlation against numeric integration") {
    ImpulseResponse wx, wp;
    wx.plus.push_back({cplx{1.0, 0.0}, cplx{-1.0, 2.0}});
    wx.minus.push_back({cplx{0.3, 0.2}, cplx{0.8, -0.5}});
    wp.plus.push_back({cplx{0.5, -0.4}, cplx{-0.7, -1.0}});
    wp.minus.push_back({cplx{-0.1, 0.6}, cplx{1.1, 0.9}});

    const ImpulseResponse c = cross_correlation(wx, wp);
    const double L = 80.0;
    const int n = 20000;
    for (double u : {1.7, 0.4, -0.6, -2.2}) {
        // int wx(a) wp(a + u) da over both half lines, split where either
        // factor switches branch.
        const cplx want = split_integral(
            [&](double a, double mid) {
                const auto& xb = (mid >= 0.0) ? wx.plus : wx.minus;
                const auto& pb = (mid + u >= 0.0) ? wp.plus : wp.minus;
                return branch_sum(xb, a) * branch_sum(pb, a + u);
            },
            -L, L, {0.0, -u}, n);
        CHECK(std::abs(ir_eval(c, u) - want) < 1e-9);
    }
}

TEST_CASE("causal estimation preserves the canonical commutator") {
    SpectralModel mdl = e1();
    KernelSet ks = build_kernels(mdl, calibrate_backaction(mdl));
    WienerSolution sx = synthesize(mdl, Observable::position);
    WienerSolution sp = synthesize(mdl, Observable::momentum);
    ImpulseResponse wx = ImpulseResponse::from_rational(sx.W);
    ImpulseResponse wp = ImpulseResponse::from_rational(sp.W);
    const double W0 = mdl.params.Omega0;

    const ErrorCommutatorResult ec =
        error_commutator(ks, wx.to_lab_frame(W0), wp.to_lab_frame(W0));
    CHECK(std::abs(ec.value - cplx{0.0, hbar}) < 1e-10 * hbar);

    SECTION("anticausal filtering breaks the identity") {
        ImpulseResponse ax = wx.time_reversed().to_lab_frame(W0);
        ImpulseResponse ap = wp.time_reversed().to_lab_frame(W0);
        CHECK_THROWS_AS(error_commutator(ks, ax, ap), usage_error);
        const ErrorCommutatorResult bad = error_commutator(ks, ax, ap, true);
        CHECK(std::abs(bad.value - cplx{0.0, hbar}) > 1e-3 * hbar);
    }
}

TEST_CASE("thermal point also preserves the commutator") {
    SpectralModel mdl = near_resonance_model(OscMeasParams::from_rates(1.0, 4.5, 5.0));
    KernelSet ks = build_kernels(mdl, calibrate_backaction(mdl));
    ImpulseResponse wx =
        ImpulseResponse::from_rational(synthesize(mdl, Observable::position).W);
    ImpulseResponse wp =
        ImpulseResponse::from_rational(synthesize(mdl, Observable::momentum).W);
    const ErrorCommutatorResult ec = error_commutator(
        ks, wx.to_lab_frame(mdl.params.Omega0), wp.to_lab_frame(mdl.params.Omega0));
    CHECK(std::abs(ec.value - cplx{0.0, hbar}) < 1e-10 * hbar);
}
