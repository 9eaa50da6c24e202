#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "detc/certify.hpp"
#include "detc/config.hpp"
#include "detc/io.hpp"

namespace fs = std::filesystem;

namespace {

using namespace detc;

struct Common {
    std::string config_path;
    std::string out_dir = "out";
    std::string phi_miet;
    std::optional<std::uint64_t> seed;
    std::optional<double> horizon;
    std::optional<int> runs;
};

void attach(CLI::App* sub, Common& c, bool with_out, bool with_runs) {
    sub->add_option("config", c.config_path, "run description file")->required();
    sub->add_option("--phi-miet", c.phi_miet, "clock endpoint source for every network")
        ->check(CLI::IsMember({"derived", "override"}));
    sub->add_option("--seed", c.seed, "override sim.seed");
    sub->add_option("--horizon", c.horizon, "override sim.horizon");
    if (with_out) sub->add_option("--out", c.out_dir, "output directory");
    if (with_runs) sub->add_option("--runs", c.runs, "override mc.runs");
}

RunConfig load_and_adjust(const Common& c) {
    RunConfig cfg = load_config(c.config_path);
    for (NetConfig& n : cfg.nets) {
        if (c.phi_miet == "derived") n.timing.phi_mode = PhiEndpointMode::derived;
        if (c.phi_miet == "override") n.timing.phi_mode = PhiEndpointMode::override_values;
    }
    if (c.seed) cfg.sim.seed = *c.seed;
    if (c.horizon) cfg.sim.horizon = *c.horizon;
    if (c.runs) cfg.mc_runs = *c.runs;
    return cfg;
}

double expected_delay_of(const NetConfig& nc) {
    if (nc.fixed_delay) return *nc.fixed_delay;
    if (nc.delay.bound > 0 && nc.delay.rate > 0) return nc.delay.mean();
    return 0.0;
}

std::ofstream open_out(const fs::path& dir, const char* name) {
    fs::create_directories(dir);
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + (dir / name).string());
    return os;
}

int cmd_bounds(const Common& c) {
    const RunConfig cfg = load_and_adjust(c);
    const auto nets = build_networks(cfg);
    for (std::size_t i = 0; i < nets.size(); ++i) {
        const DerivedConstants d = derive_constants(nets[i].timing);
        const TriggerCoefficients& tc = nets[i].trigger.coeffs;
        const std::string p = "net." + std::to_string(i) + ".";
        std::cout << p << "tau_mati0 = " << format_double(d.tau_mati0) << "\n"
                  << p << "tau_mati1 = " << format_double(d.tau_mati1) << "\n"
                  << p << "phi_miet0 = " << format_double(d.phi_miet0) << "\n"
                  << p << "phi_miet1 = " << format_double(d.phi_miet1) << "\n"
                  << p << "gammabar0 = " << format_double(d.gammabar0) << "\n"
                  << p << "gammabar1 = " << format_double(d.gammabar1) << "\n"
                  << p << "varpi0 = " << format_double(d.varpi0) << "\n"
                  << p << "varpi1 = " << format_double(d.varpi1) << "\n"
                  << p << "beta_hat = " << format_double(d.beta_hat) << "\n"
                  << p << "expected_delay = " << format_double(expected_delay_of(cfg.nets[i]))
                  << "\n"
                  << p << "chi_reset = " << format_double(tc.chi_reset) << "\n"
                  << p << "delta_chi = " << format_double(tc.delta_chi) << "\n"
                  << p << "ramp_slope = " << format_double(tc.ramp_slope) << "\n";
    }
    return 0;
}

int cmd_check(const Common& c) {
    const RunConfig cfg = load_and_adjust(c);
    const auto nets = build_networks(cfg);
    bool all = true;
    auto verdict = [](bool b) { return b ? "PASS" : "FAIL"; };
    for (std::size_t i = 0; i < nets.size(); ++i) {
        const ConditionReport r =
            check_conditions(nets[i].timing, expected_delay_of(cfg.nets[i]),
                             nets[i].trigger.coeffs);
        const std::string p = "net." + std::to_string(i) + ".";
        std::cout << p << "timers = " << verdict(r.timers.pass) << "\n"
                  << p << "timers.margin = " << format_double(r.timers.margin) << "\n";
        for (int m = 0; m < 4; ++m)
            std::cout << p << "timers.m" << m << " = " << format_double(r.timer_margins[m])
                      << "\n";
        std::cout << p << "jump = " << verdict(r.jump.pass) << "\n"
                  << p << "jump.margin = " << format_double(r.jump.margin) << "\n"
                  << p << "ordering = " << verdict(r.ordering.pass) << "\n"
                  << p << "ordering.crossing = " << format_double(r.ordering_crossing) << "\n"
                  << p << "dwell = " << verdict(r.dwell.pass) << "\n"
                  << p << "dwell.margin = " << format_double(r.dwell.margin) << "\n"
                  << p << "structure = " << verdict(r.structure.pass) << "\n"
                  << p << "structure.margin = " << format_double(r.structure.margin) << "\n"
                  << p << "pass = " << verdict(r.all_pass()) << "\n";
        all = all && r.all_pass();
    }
    std::cout << "all = " << verdict(all) << "\n";
    return all ? 0 : 1;
}

int cmd_run(const Common& c) {
    const RunConfig cfg = load_and_adjust(c);
    const auto plant = build_plant(cfg);
    const auto nets = build_networks(cfg);
    const Simulator sim(plant, nets, cfg.sim);
    const SimResult res = sim.run(build_initial_state(cfg, *plant, nets));

    const fs::path dir(c.out_dir);
    if (cfg.sim.record_trace) {
        auto os = open_out(dir, "trace.csv");
        write_trace_csv(os, res);
    }
    if (cfg.sim.record_events) {
        auto os = open_out(dir, "events.csv");
        write_events_csv(os, res.events);
    }
    if (!res.u_grid.empty()) {
        auto os = open_out(dir, "u_grid.csv");
        write_grid_csv(os, res.u_grid, "certificate");
    }
    {
        auto os = open_out(dir, "summary.txt");
        write_summary(os, res);
        if (!res.diverged)
            os << "final_certificate = "
               << format_double(certificate_value(*plant, nets, res.final_state)) << "\n";
    }
    std::cout << (res.diverged ? "diverged" : "completed") << ", outputs in " << dir.string()
              << "\n";
    return res.diverged ? 3 : 0;
}

int cmd_mc(const Common& c) {
    RunConfig cfg = load_and_adjust(c);
    cfg.sim.record_trace = false;
    if (cfg.sim.u_grid_dt <= 0) cfg.sim.u_grid_dt = 0.1;
    const int n = cfg.mc_runs > 0 ? cfg.mc_runs : 100;

    const auto plant = build_plant(cfg);
    const auto nets = build_networks(cfg);
    Simulator(plant, nets, cfg.sim);  // validate the setup once before fanning out
    const auto results = run_ensemble(plant, nets, cfg.sim, cfg.sim.seed, n);

    int diverged = 0;
    std::vector<double> pooled_du, finals;
    for (const SimResult& r : results) {
        if (r.diverged) ++diverged;
        pooled_du.insert(pooled_du.end(), r.jump_du.begin(), r.jump_du.end());
    }

    std::vector<std::pair<double, double>> mean_u;
    if (!results.empty() && !results.front().u_grid.empty()) {
        const std::size_t g = results.front().u_grid.size();
        mean_u.resize(g);
        for (std::size_t t = 0; t < g; ++t) {
            double acc = 0;
            int cnt = 0;
            for (const SimResult& r : results) {
                if (r.diverged || r.u_grid.size() != g) continue;
                acc += r.u_grid[t].second;
                ++cnt;
            }
            mean_u[t] = {results.front().u_grid[t].first, cnt ? acc / cnt : 0.0};
        }
    }
    const DecaySummary decay = fit_decay(mean_u);
    const SampleStats du = summarize(pooled_du);

    const fs::path dir(c.out_dir);
    {
        auto os = open_out(dir, "decay.csv");
        write_grid_csv(os, mean_u, "mean_certificate");
    }
    {
        auto os = open_out(dir, "mc_summary.txt");
        os << "runs = " << n << "\n";
        os << "diverged = " << diverged << "\n";
        os << "jump_du.count = " << du.count << "\n";
        os << "jump_du.mean = " << format_double(du.mean) << "\n";
        os << "jump_du.se = " << format_double(du.se) << "\n";
        os << "decay.rate = " << format_double(decay.rate) << "\n";
        os << "decay.u0 = " << format_double(decay.u0) << "\n";
        os << "decay.points = " << decay.points << "\n";
        for (std::size_t i = 0; i < nets.size(); ++i) {
            const DerivedConstants d = derive_constants(nets[i].timing);
            std::vector<double> tx, fails, flips, blocked;
            for (const SimResult& r : results) {
                tx.push_back(static_cast<double>(r.tally[i].transmissions));
                fails.push_back(static_cast<double>(r.tally[i].failures));
                flips.push_back(static_cast<double>(r.tally[i].logic_flips));
                blocked.push_back(decompose_blocked_time(r.events, static_cast<int>(i),
                                                         nets[i].timing.tau_miet1,
                                                         cfg.sim.horizon)
                                      .blocked_measure);
            }
            const std::string p = "net." + std::to_string(i) + ".";
            os << p << "beta_hat = " << format_double(d.beta_hat) << "\n";
            os << p << "transmissions.mean = " << format_double(summarize(tx).mean) << "\n";
            os << p << "failures.mean = " << format_double(summarize(fails).mean) << "\n";
            os << p << "logic_flips.mean = " << format_double(summarize(flips).mean) << "\n";
            os << p << "blocked.mean = " << format_double(summarize(blocked).mean) << "\n";
        }
    }
    std::cout << "completed " << n << " runs (" << diverged << " diverged), outputs in "
              << dir.string() << "\n";
    return diverged > 0 ? 3 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-triggered networked control: certification and simulation"};
    app.require_subcommand(1);

    Common cb, cc, cr, cm;
    CLI::App* bounds = app.add_subcommand("bounds", "print the derived timing quantities");
    attach(bounds, cb, false, false);
    CLI::App* check = app.add_subcommand("check", "evaluate the design conditions");
    attach(check, cc, false, false);
    CLI::App* run = app.add_subcommand("run", "simulate one realization");
    attach(run, cr, true, false);
    CLI::App* mc = app.add_subcommand("mc", "simulate an ensemble");
    attach(mc, cm, true, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (bounds->parsed()) return cmd_bounds(cb);
        if (check->parsed()) return cmd_check(cc);
        if (run->parsed()) return cmd_run(cr);
        if (mc->parsed()) return cmd_mc(cm);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
