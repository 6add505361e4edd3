// cwiener: causal Wiener filter synthesis and verification for continuously
// measured oscillators. Subcommands: sweep, verify, simulate.
#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "cwiener/commutator.hpp"
#include "cwiener/feedback.hpp"
#include "cwiener/model.hpp"
#include "cwiener/sim.hpp"
#include "cwiener/wiener.hpp"

namespace {

using nlohmann::json;
using namespace cwiener;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitVerifyFail = 2;
constexpr int kExitRuntime = 3;

// Shortest round-trip decimal representation.
std::string fmt(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

struct RunConfig {
    json raw;  // resolved config, embedded in reports
    OscMeasParams params;
    double gamma0 = 1.0, eta = 1.0, omega0 = 5000.0;
    std::vector<double> sweep_ratio, sweep_nth;
    bool has_loop = false;
    LoopModel loop;
    double sim_dt = 0.0, sim_T = 0.0;
    int sim_batches = 100;
    std::uint64_t seed = 0;
    bool zero_noise = false;
    bool anticausal_filter = false;
    std::filesystem::path out_dir = ".";
    std::string sweep_csv = "sweep.csv", verify_json = "verify.json";
    std::string trace_csv = "trace.csv", stats_json = "stats.json";
};

RationalFn parse_rational(const json& j) {
    auto coeffs = [](const json& arr) {
        std::vector<cplx> c;
        for (const auto& v : arr) c.emplace_back(v.get<double>());
        return Polynomial(std::move(c));
    };
    if (!j.contains("num") || !j.contains("den"))
        throw config_error("loop transfer functions need 'num' and 'den' coefficient lists");
    return RationalFn(coeffs(j.at("num")), coeffs(j.at("den")));
}

RunConfig parse_config(const json& j) {
    RunConfig cfg;
    cfg.raw = j;

    double gamma0 = 1.0, n_th = 0.0, gamma_meas = 1.0, eta = 1.0, omega0 = 5000.0;
    if (j.contains("model")) {
        const json& m = j.at("model");
        gamma0 = m.value("gamma0", gamma0);
        n_th = m.value("n_th", n_th);
        gamma_meas = m.value("gamma_meas", gamma_meas);
        eta = m.value("eta", eta);
        omega0 = m.value("omega0", omega0);
    }
    cfg.params = OscMeasParams::from_rates(gamma0, n_th, gamma_meas, omega0, eta);
    cfg.gamma0 = gamma0;
    cfg.eta = eta;
    cfg.omega0 = omega0;

    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        for (const auto& v : s.value("gamma_meas_over_gamma0", json::array()))
            cfg.sweep_ratio.push_back(v.get<double>());
        for (const auto& v : s.value("n_th", json::array())) cfg.sweep_nth.push_back(v.get<double>());
    }
    if (cfg.sweep_ratio.empty()) cfg.sweep_ratio = {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
    if (cfg.sweep_nth.empty()) cfg.sweep_nth = {0.0, 0.5, 5.0, 50.0};
    for (double r : cfg.sweep_ratio)
        if (!(r > 0.0)) throw config_error("sweep: gamma_meas_over_gamma0 entries must be positive");
    for (double n : cfg.sweep_nth)
        if (n < 0.0) throw config_error("sweep: n_th entries must be non-negative");

    if (j.contains("loop") && !j.at("loop").is_null()) {
        cfg.has_loop = true;
        cfg.loop.M = parse_rational(j.at("loop").at("M"));
        cfg.loop.K = parse_rational(j.at("loop").at("K"));
    }

    if (j.contains("sim")) {
        const json& s = j.at("sim");
        cfg.sim_dt = s.value("dt", 0.0);
        cfg.sim_T = s.value("T", 0.0);
        cfg.sim_batches = s.value("n_batches", 100);
        cfg.seed = s.value("seed", std::uint64_t{0});
        cfg.zero_noise = s.value("zero_noise", false);
    }
    if (j.contains("verify")) cfg.anticausal_filter = j.at("verify").value("anticausal_filter", false);

    if (j.contains("output")) {
        const json& o = j.at("output");
        cfg.out_dir = o.value("dir", std::string("."));
        cfg.sweep_csv = o.value("sweep_csv", cfg.sweep_csv);
        cfg.verify_json = o.value("verify_json", cfg.verify_json);
        cfg.trace_csv = o.value("trace_csv", cfg.trace_csv);
        cfg.stats_json = o.value("stats_json", cfg.stats_json);
    }
    return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot open output file: " + path.string());
    out << body;
}

int cmd_sweep(const RunConfig& cfg) {
    struct Row {
        double ratio, nth, gw, sx, sp, prod;
    };
    std::vector<std::pair<double, double>> grid;
    for (double r : cfg.sweep_ratio)
        for (double n : cfg.sweep_nth) grid.emplace_back(r, n);

    std::vector<Row> rows(grid.size());
    std::vector<std::future<void>> futs;
    const int workers =
        std::max(1, std::min<int>(grid.size(), std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < workers; ++t)
        futs.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1)) {
                const auto [r, n] = grid[i];
                OscMeasParams p = OscMeasParams::from_rates(cfg.gamma0, n, r * cfg.gamma0,
                                                            cfg.omega0, cfg.eta);
                const SpectralModel mdl = near_resonance_model(p);
                const WienerSolution sx = synthesize(mdl, Observable::position);
                const WienerSolution sp = synthesize(mdl, Observable::momentum);
                const double x2 = mdl.rates.x_zpf * mdl.rates.x_zpf;
                const double p2 = mdl.rates.p_zpf * mdl.rates.p_zpf;
                rows[i] = {r,
                           n,
                           mdl.rates.Gamma_W,
                           sx.error_variance / x2,
                           sp.error_variance / p2,
                           sx.error_variance * sp.error_variance / (hbar * hbar / 4.0)};
            }
        }));
    for (auto& f : futs) f.get();

    std::string csv =
        "gamma_meas_over_gamma0,n_th,gamma_W,sigma_dx2_over_xzpf2,sigma_dp2_over_pzpf2,"
        "product_over_hbar2_4\n";
    for (const Row& r : rows)
        csv += fmt(r.ratio) + "," + fmt(r.nth) + "," + fmt(r.gw) + "," + fmt(r.sx) + "," +
               fmt(r.sp) + "," + fmt(r.prod) + "\n";
    write_file(cfg.out_dir / cfg.sweep_csv, csv);
    return kExitOk;
}

int cmd_verify(const RunConfig& cfg) {
    const SpectralModel mdl = near_resonance_model(cfg.params);
    const WienerSolution sx = synthesize(mdl, Observable::position);
    const WienerSolution sp = synthesize(mdl, Observable::momentum);

    const cplx c = calibrate_backaction(mdl);
    const KernelSet ks = build_kernels(mdl, c);
    const double max_kyy = max_abs_on_grid(ks.K_yy, ks.gamma_w) / hbar;
    const double max_kxy = max_abs_on_grid(ks.K_xy, ks.gamma_w, /*positive_lags_only=*/true) / hbar;

    ImpulseResponse wx = ImpulseResponse::from_rational(sx.W);
    ImpulseResponse wp = ImpulseResponse::from_rational(sp.W);
    if (cfg.anticausal_filter) {
        wx = wx.time_reversed();
        wp = wp.time_reversed();
    }
    json failures = json::array();
    double comm_dev = 0.0;
    if (!wx.causal() || !wp.causal()) {
        failures.push_back(
            "estimation filter is anti-causal: the commutator identity assumes causal filtering "
            "of the record");
        comm_dev = std::numeric_limits<double>::quiet_NaN();
    } else {
        const ErrorCommutatorResult ec = error_commutator(
            ks, wx.to_lab_frame(cfg.params.Omega0), wp.to_lab_frame(cfg.params.Omega0));
        comm_dev = std::abs(ec.value - cplx{0.0, hbar}) / hbar;
    }

    double inloop_dev = 0.0;
    if (cfg.has_loop) inloop_dev = squashing_report(mdl, cfg.loop, sx).max_error_deviation;

    const double thr_kyy = 1e-10, thr_kxy = 1e-10, thr_comm = 1e-8, thr_loop = 1e-10;
    if (!(max_kyy <= thr_kyy)) failures.push_back("record self-commutator exceeds threshold");
    if (!(max_kxy <= thr_kxy)) failures.push_back("record-causality kernel exceeds threshold");
    if (!(comm_dev <= thr_comm)) failures.push_back("error commutator deviates from i*hbar");
    if (!(inloop_dev <= thr_loop)) failures.push_back("in-loop error spectrum deviates");

    json rep;
    rep["config"] = cfg.raw;
    rep["checks"] = {{"max_Kyy_over_hbar", max_kyy},
                     {"max_Kxy_causal_over_hbar", max_kxy},
                     {"commutator_deviation_over_hbar", comm_dev},
                     {"inloop_max_deviation", inloop_dev}};
    rep["thresholds"] = {{"max_Kyy_over_hbar", thr_kyy},
                         {"max_Kxy_causal_over_hbar", thr_kxy},
                         {"commutator_deviation_over_hbar", thr_comm},
                         {"inloop_max_deviation", thr_loop}};
    rep["failures"] = failures;
    rep["pass"] = failures.empty();
    write_file(cfg.out_dir / cfg.verify_json, rep.dump(2) + "\n");
    std::cout << (failures.empty() ? "verify: pass" : "verify: FAIL") << "\n";
    return failures.empty() ? kExitOk : kExitVerifyFail;
}

int cmd_simulate(const RunConfig& cfg) {
    const SpectralModel mdl = near_resonance_model(cfg.params);
    const WienerSolution sx = synthesize(mdl, Observable::position);

    SimConfig sim = SimConfig::from_model(mdl, sx);
    sim.dt = cfg.sim_dt > 0.0 ? cfg.sim_dt : 0.01 / mdl.rates.Gamma_W;
    sim.T = cfg.sim_T > 0.0 ? cfg.sim_T : 2000.0 / mdl.rates.Gamma_W;
    sim.n_batches = cfg.sim_batches;
    sim.seed = cfg.seed;
    if (cfg.zero_noise) {
        sim.A = 0.0;
        sim.S_imp = 0.0;
    }
    sim.validate();

    const SimResult res =
        cfg.has_loop ? simulate_closed_loop(sim, cfg.loop) : simulate_open_loop(sim);

    const double x2 = mdl.rates.x_zpf * mdl.rates.x_zpf;
    const double p2 = mdl.rates.p_zpf * mdl.rates.p_zpf;
    const double analytic = cfg.zero_noise ? 0.0 : sigma_dx2_closed_form(mdl.rates);

    std::string csv = "t,x,y,x_e,p_e,dx,dp\n";
    for (std::size_t i = 0; i < res.trace.dx.size(); ++i) {
        const double t = static_cast<double>(i) * res.trace.dt;
        csv += fmt(t) + "," + fmt(res.trace.a[i].real()) + "," + fmt(res.trace.y[i].real()) + "," +
               fmt(res.trace.x_e[i]) + "," + fmt(res.trace.p_e[i]) + "," + fmt(res.trace.dx[i]) +
               "," + fmt(res.trace.dp[i]) + "\n";
    }
    write_file(cfg.out_dir / cfg.trace_csv, csv);

    json stats;
    stats["config"] = cfg.raw;
    stats["empirical"] = {{"sigma_dx2_over_xzpf2", res.var_dx / x2},
                          {"sigma_dp2_over_pzpf2", res.var_dp / p2},
                          {"inloop_minus_open_dx2_over_xzpf2", res.var_diff / x2}};
    stats["analytic"] = {{"sigma_dx2_over_xzpf2", analytic / x2},
                         {"sigma_dp2_over_pzpf2", analytic / x2},
                         {"inloop_minus_open_dx2_over_xzpf2", 0.0}};
    stats["se"] = {{"sigma_dx2_over_xzpf2", res.se_dx / x2},
                   {"sigma_dp2_over_pzpf2", res.se_dp / p2},
                   {"inloop_minus_open_dx2_over_xzpf2", res.se_diff / x2}};
    stats["n_batches"] = res.batches.size();
    write_file(cfg.out_dir / cfg.stats_json, stats.dump(2) + "\n");

    const double z = res.se_dx > 0.0 ? (res.var_dx - analytic) / res.se_dx : 0.0;
    std::cout << "empirical=" << fmt(res.var_dx / x2) << ", analytic=" << fmt(analytic / x2)
              << ", z=" << fmt(z) << "\n";
    return kExitOk;
}

json error_json(const std::string& type, const std::string& msg) {
    return json{{"error", {{"type", type}, {"message", msg}}}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal Wiener filtering for continuously measured oscillators"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags are accepted after the subcommand too

    std::string config_path, out_override;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_override, "output directory (overrides config)");
    auto* seed_opt = app.add_option("--seed", seed_override, "RNG seed (overrides config)");

    auto* sweep = app.add_subcommand("sweep", "error-variance grid over (Gamma_meas, n_th)");
    auto* verify = app.add_subcommand("verify", "commutator and in-loop equivalence report");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo time-domain run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }
    seed_given = seed_opt->count() > 0;

    try {
        json j = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw config_error("cannot read config file: " + config_path);
            in >> j;
        }
        RunConfig cfg = parse_config(j);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_given) {
            cfg.seed = seed_override;
            cfg.raw["sim"]["seed"] = seed_override;
        }
        if (sweep->parsed()) return cmd_sweep(cfg);
        if (verify->parsed()) return cmd_verify(cfg);
        if (simulate->parsed()) return cmd_simulate(cfg);
        return kExitValidation;
    } catch (const config_error& e) {
        std::cerr << error_json("config_error", e.what()).dump() << "\n";
        return kExitValidation;
    } catch (const usage_error& e) {
        std::cerr << error_json("usage_error", e.what()).dump() << "\n";
        return kExitValidation;
    } catch (const json::exception& e) {
        std::cerr << error_json("config_error", e.what()).dump() << "\n";
        return kExitValidation;
    } catch (const error& e) {
        std::cerr << error_json("runtime_error", e.what()).dump() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << error_json("runtime_error", e.what()).dump() << "\n";
        return kExitRuntime;
    }
}
