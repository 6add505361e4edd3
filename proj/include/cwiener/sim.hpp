#ifndef CWIENER_SIM_HPP
#define CWIENER_SIM_HPP

#include <cmath>
#include <cstdint>
#include <future>
#include <thread>
#include <vector>

#include "cwiener/feedback.hpp"
#include "cwiener/wiener.hpp"

namespace cwiener {

/// Counter-based Gaussian stream: SplitMix64 (Steele/Lea/Flood finalizer,
/// golden-ratio increment) keyed by (seed, batch), feeding Box-Muller.
/// Bit-identical across platforms for a given key; no shared state.
class GaussianStream {
  public:
    GaussianStream(std::uint64_t seed, std::uint64_t batch)
        : state_(mix(mix(seed + 0x9E3779B97F4A7C15ull) ^ mix(batch + 0xBF58476D1CE4E5B9ull))) {}

    double uniform() {  // in (0, 1]
        state_ += 0x9E3779B97F4A7C15ull;
        return static_cast<double>((mix(state_) >> 11) + 1) * 0x1p-53;
    }

    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double th = 6.283185307179586476925286766559 * uniform();
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Recursive digital filter from a causal stable rational transfer function.
/// Poles are mapped exponentially exactly (z_k = e^{p_k dt}); the convolution
/// quadrature uses a trapezoidal endpoint weight, and the residual O(dt^2)
/// quadrature error is absorbed into the feedthrough so the DC gain matches
/// the continuous filter exactly. Output at step n uses inputs up to n only.
class DiscreteFilter {
  public:
    DiscreteFilter() = default;

    DiscreteFilter(const RationalFn& f, double dt) {
        if (dt <= 0.0) throw usage_error("discretize_filter: dt must be positive");
        const ImpulseResponse h = ImpulseResponse::from_rational(f);
        if (!h.causal()) throw usage_error("discretize_filter: anticausal pole");
        cplx dc = h.delta;
        for (const auto& m : h.plus) {
            const cplx decay = std::exp(m.rate * dt);
            modes_.push_back({m.amp * dt, decay, cplx{0.0}});
            dc += m.amp * dt * (1.0 / (1.0 - decay) - 0.5);
        }
        direct_ = h.delta;
        for (const auto& m : modes_) direct_ += 0.5 * m.amp;  // trapezoid endpoint
        if (!f.is_zero()) direct_ += f.eval(cplx{0.0}) - dc;  // exact DC
    }

    /// Contribution of past inputs to the next output (the next input's own
    /// share is direct() * u). Lets a feedback loop solve its feedthrough.
    cplx history() const {
        cplx v{0.0};
        for (const auto& m : modes_) v += m.amp * m.decay * m.state;
        return v;
    }

    cplx direct() const { return direct_; }

    cplx step(cplx u) {
        cplx out = direct_ * u;
        for (auto& m : modes_) {
            out += m.amp * m.decay * m.state;
            m.state = m.decay * m.state + u;
        }
        return out;
    }

    void reset() {
        for (auto& m : modes_) m.state = cplx{0.0};
    }

    double dc_gain() const {
        cplx g = direct_;
        for (const auto& m : modes_) g += m.amp * m.decay / (1.0 - m.decay);
        return g.real();
    }

  private:
    struct Mode {
        cplx amp, decay, state;
    };
    cplx direct_{0.0};  // coefficient on the current sample, DC-corrected
    std::vector<Mode> modes_;
};

struct SimConfig {
    double gamma = 0.0;     // envelope decay Gamma0/2
    double A = 0.0;         // quadrature diffusion: PSD A/(gamma^2 + d^2)
    double S_imp = 0.0;     // imprecision floor per quadrature
    double p_scale = 1.0;   // m*Omega0: maps the Im quadrature to momentum
    double Gamma_W = 1.0;   // filter bandwidth, sets resolution/mixing scales
    RationalFn W;           // causal envelope estimation filter (position)
    double dt = 0.0;
    double T = 0.0;
    int n_batches = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(dt > 0.0) || !(T > 0.0)) throw config_error("sim: dt and T must be positive");
        if (dt > 0.05 / Gamma_W + 1e-15)
            throw config_error("sim: dt must resolve the filter bandwidth (dt <= 0.05/Gamma_W)");
        if (T < 200.0 / Gamma_W - 1e-9)
            throw config_error("sim: each batch must mix (T >= 200/Gamma_W)");
        if (n_batches < 1) throw config_error("sim: need at least one batch");
        if (gamma < 0.0 || A < 0.0 || S_imp < 0.0) throw config_error("sim: negative rate");
        if (!W.is_zero() && !W.causal()) throw config_error("sim: estimation filter must be causal");
    }

    static SimConfig from_model(const SpectralModel& mdl, const WienerSolution& sol) {
        SimConfig cfg;
        cfg.gamma = mdl.rates.Gamma0 / 2.0;
        cfg.A = mdl.Sxx.eval(0.0) * cfg.gamma * cfg.gamma;
        cfg.S_imp = mdl.S_imp;
        cfg.p_scale = mdl.params.m * mdl.params.Omega0;
        cfg.Gamma_W = mdl.rates.Gamma_W;
        cfg.W = sol.W;
        return cfg;
    }
};

/// Time-domain realizations. The signal is the rotating-frame complex
/// envelope a(t) = X1 + i X2; x is the Re quadrature, p = p_scale * Im.
/// The record is the complex demodulated readout a + imprecision noise.
struct TraceSet {
    double dt = 0.0;
    std::vector<cplx> a, y;
    std::vector<double> x_e, p_e, dx, dp;
};

struct BatchStats {
    double var_dx = 0.0, var_dp = 0.0;
};

struct SimResult {
    TraceSet trace;  // batch 0
    std::vector<BatchStats> batches;
    double var_dx = 0.0, se_dx = 0.0;
    double var_dp = 0.0, se_dp = 0.0;
    // closed-loop only: common-seed mean of (in-loop dx^2 - open-loop dx^2)
    double var_diff = 0.0, se_diff = 0.0;
};

namespace detail {

struct BatchOutput {
    TraceSet trace;
    BatchStats stats;
    double diff_mean = 0.0;
};

/// One batch. With a loop, the controller runs in-loop sample-by-sample with
/// the feedthrough solved algebraically; both quadratures of the envelope are
/// actuated by K*y_c, and the in-loop estimate uses the factored form
/// W(y_c - F y_c) + K y_c of the in-loop filter, so the in-loop error equals
/// the open-loop error realization exactly (common random numbers).
inline BatchOutput run_batch(const SimConfig& cfg, const LoopModel* loop, std::uint64_t batch,
                             bool keep_trace) {
    const std::size_t n = static_cast<std::size_t>(std::llround(cfg.T / cfg.dt));
    const std::size_t burn =
        std::min(n / 2, static_cast<std::size_t>(10.0 / (cfg.Gamma_W * cfg.dt)));
    GaussianStream rng(cfg.seed, batch);

    const double decay = std::exp(-cfg.gamma * cfg.dt);
    const double steady = cfg.gamma > 0.0 ? cfg.A / (2.0 * cfg.gamma) : 0.0;
    const double kick = std::sqrt(std::max(0.0, steady * (1.0 - decay * decay)));
    const double imp = cfg.S_imp > 0.0 ? std::sqrt(cfg.S_imp / cfg.dt) : 0.0;
    const double guard = 1e6 * (std::sqrt(steady) + imp + 1.0);

    DiscreteFilter w_open(cfg.W, cfg.dt);
    DiscreteFilter w_loop, f_loop, k_loop;
    if (loop) {
        w_loop = DiscreteFilter(cfg.W, cfg.dt);
        f_loop = DiscreteFilter(loop->M * loop->K, cfg.dt);
        k_loop = DiscreteFilter(loop->K, cfg.dt);
        if (std::abs(1.0 - f_loop.direct()) < 1e-9)
            throw instability_error("loop feedthrough is singular at this time step");
    }

    BatchOutput out;
    out.trace.dt = cfg.dt;
    if (keep_trace) {
        out.trace.a.reserve(n);
        out.trace.y.reserve(n);
        out.trace.x_e.reserve(n);
        out.trace.p_e.reserve(n);
        out.trace.dx.reserve(n);
        out.trace.dp.reserve(n);
    }

    cplx a{std::sqrt(steady) * rng.gauss(), std::sqrt(steady) * rng.gauss()};
    double acc_dx2 = 0, acc_dp2 = 0, acc_diff = 0;
    std::size_t counted = 0;

    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) a = decay * a + kick * cplx{rng.gauss(), rng.gauss()};
        const cplx y_o = a + imp * cplx{rng.gauss(), rng.gauss()};
        const cplx est_open = w_open.step(y_o);
        const double dx_o = a.real() - est_open.real();
        const double dp_o = cfg.p_scale * (a.imag() - est_open.imag());

        double dx = dx_o, dp = dp_o;
        double x_e = est_open.real(), p_e = cfg.p_scale * est_open.imag();
        cplx y = y_o;
        cplx a_obs = a;
        if (loop) {
            const cplx y_c = (y_o + f_loop.history()) / (1.0 - f_loop.direct());
            const cplx f_out = f_loop.step(y_c);
            const cplx u_k = k_loop.step(y_c);
            const cplx est_c = w_loop.step(y_c - f_out) + u_k;
            a_obs = a + u_k;
            y = y_c;
            x_e = est_c.real();
            p_e = cfg.p_scale * est_c.imag();
            dx = a_obs.real() - est_c.real();
            dp = cfg.p_scale * (a_obs.imag() - est_c.imag());
        }

        if (std::abs(a_obs) > guard || std::abs(y) > guard)
            throw instability_error("trace diverged; loop is unstable at this discretization");

        if (i >= burn) {
            acc_dx2 += dx * dx;
            acc_dp2 += dp * dp;
            acc_diff += dx * dx - dx_o * dx_o;
            ++counted;
        }
        if (keep_trace) {
            out.trace.a.push_back(a_obs);
            out.trace.y.push_back(y);
            out.trace.x_e.push_back(x_e);
            out.trace.p_e.push_back(p_e);
            out.trace.dx.push_back(dx);
            out.trace.dp.push_back(dp);
        }
    }
    out.stats.var_dx = counted ? acc_dx2 / counted : 0.0;
    out.stats.var_dp = counted ? acc_dp2 / counted : 0.0;
    out.diff_mean = counted ? acc_diff / counted : 0.0;
    return out;
}

inline SimResult run_all(const SimConfig& cfg, const LoopModel* loop) {
    cfg.validate();
    if (loop) (void)closed_loop(*loop);  // reject unstable loops up front
    const int nb = cfg.n_batches;
    std::vector<BatchOutput> outs(nb);
    const int workers = std::max(1, std::min<int>(nb, std::thread::hardware_concurrency()));
    std::vector<std::future<void>> futs;
    for (int t = 0; t < workers; ++t)
        futs.push_back(std::async(std::launch::async, [&cfg, loop, &outs, t, workers, nb] {
            for (int b = t; b < nb; b += workers) outs[b] = run_batch(cfg, loop, b, b == 0);
        }));
    for (auto& f : futs) f.get();  // rethrows worker exceptions
    SimResult res;
    double sx = 0, sx2 = 0, sp = 0, sp2 = 0, sd = 0, sd2 = 0;
    for (BatchOutput& o : outs) {
        if (res.batches.empty()) res.trace = std::move(o.trace);
        res.batches.push_back(o.stats);
        sx += o.stats.var_dx;
        sx2 += o.stats.var_dx * o.stats.var_dx;
        sp += o.stats.var_dp;
        sp2 += o.stats.var_dp * o.stats.var_dp;
        sd += o.diff_mean;
        sd2 += o.diff_mean * o.diff_mean;
    }
    res.var_dx = sx / nb;
    res.var_dp = sp / nb;
    res.var_diff = sd / nb;
    if (nb > 1) {
        res.se_dx = std::sqrt(std::max(0.0, (sx2 - sx * sx / nb) / (nb - 1)) / nb);
        res.se_dp = std::sqrt(std::max(0.0, (sp2 - sp * sp / nb) / (nb - 1)) / nb);
        res.se_diff = std::sqrt(std::max(0.0, (sd2 - sd * sd / nb) / (nb - 1)) / nb);
    }
    return res;
}

}  // namespace detail

inline SimResult simulate_open_loop(const SimConfig& cfg) { return detail::run_all(cfg, nullptr); }

inline SimResult simulate_closed_loop(const SimConfig& cfg, const LoopModel& loop) {
    return detail::run_all(cfg, &loop);
}

/// Single-frequency averaged periodogram of the (complex envelope) record at
/// offset delta from resonance: |dt * sum y_n e^{-i delta t_n}|^2 / T.
inline double periodogram_at(const std::vector<cplx>& y, double dt, double delta) {
    if (y.empty()) return 0.0;
    cplx acc{0.0};
    for (std::size_t i = 0; i < y.size(); ++i)
        acc += y[i] * std::exp(cplx{0.0, -delta * static_cast<double>(i) * dt});
    const double T = static_cast<double>(y.size()) * dt;
    // both quadratures contribute; normalize to the per-quadrature PSD
    return std::norm(acc * dt) / T / 2.0;
}

}  // namespace cwiener

#endif
