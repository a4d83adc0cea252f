#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "loopforge/errors.hpp"
#include "loopforge/harness.hpp"
#include "loopforge/io.hpp"
#include "loopforge/learning.hpp"

namespace loopforge::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSchemaHelp = R"(Scenario config (JSON, format_version 1). Every section except
"scenario" is optional; omitted fields keep their defaults. Unknown keys are rejected.

{
  "format_version": 1,
  "scenario": {
    "kind": "tracking" | "fault-recovery" | "vibration",
    "variant": "adaptive" | "fixed-baseline",
    "duration": 40.0,             seconds, whole number of control periods
    "cycles": 20,                 task repetitions, must divide the tick count
    "seed": 1,                    master seed (overridden by --seed)
    "replicates": 5,              paired seeds for compare/sweep
    "success_tolerance": 0.02,    rad
    "success_tail_fraction": 0.2, tail of each cycle that must stay in band
    "recovery_hold": 1.0,         s of sustained in-band error after a fault
    "setpoint": { "levels": [0.5, -0.5] }   cycle c targets levels[c % n]
  },
  "plant": { "inertia": 1.0, "friction": 0.1, "dt": 0.001, "control_period_steps": 10,
             "thermal": { "ambient": 25.0, "heating": 0.05, "time_constant": 30.0 } },
  "sensing": { "noise": [pos, vel, torque, temp, vib, error],
               "calibration_frames": 200, "calibration_amplitude": 0.5 },
  "disturbance": { "bias_std": 0.0, "vibration_amplitude": 0.0,
                   "vibration_frequency": 0.0, "noise_std": 0.0 },
  "faults": [ { "onset": 30.0, "duration": 20.0,
                "kind": "bias-torque" | "sensor-offset" | "overheat-drift",
                "magnitude": 1.0 } ],
  "controller": { "gains": { "kp": 20.0, "kd": 2.0 }, "tau_max": 10.0,
                  "gain_scale_limits": [0.25, 4.0],
                  "actions": [ { "name": "hold" },
                               { "name": "stiffen", "kp_scale": 1.5 },
                               { "name": "damp", "kd_scale": 1.5 },
                               { "name": "recover", "reset": true } ] },
  "network": { "hidden": [16] },
  "training": { "gamma": 0.9, "alpha": 0.01, "epochs": 5, "epsilon": 0.1,
                "epsilon_decay": 0.95, "train_every_cycles": 1,
                "decision_period_ticks": 1,
                "reward": { "error": 1.0, "energy": 0.1, "fault": 0.5 } },
  "sweep": { "gamma": [...], "alpha": [...], "kp": [...], "kd": [...] }   sweep only
})";

ScenarioConfig load_config(const CliInvocation& inv) {
    if (inv.config.empty()) {
        throw ConfigError("--config is required for this subcommand");
    }
    ScenarioConfig config = load_scenario(inv.config);
    if (inv.seed) config.seed = *inv.seed;
    if (inv.replicates) {
        config.replicates = *inv.replicates;
        config.validate();
    }
    return config;
}

void prepare_out(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ExportError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
}

std::string describe(const std::optional<double>& v) { return v ? format_number(*v) : "n/a"; }

void print_metrics(std::ostream& out, const EpisodeMetrics& m) {
    out << fmt::format("success_rate              {}\n", format_number(m.success_rate));
    out << fmt::format("mean_fault_response (s)   {}\n", describe(m.mean_fault_response));
    out << fmt::format("positional_error_variance {}\n", format_number(m.positional_error_variance));
    out << fmt::format("energy_per_task (J)       {}\n", format_number(m.energy_per_task));
    out << fmt::format("efficiency (%)            {}\n", describe(m.efficiency));
}

std::string arm_label(ControllerVariant v) { return std::string(to_string(v)); }

int do_run(const CliInvocation& inv, std::ostream& out) {
    const ScenarioConfig config = load_config(inv);
    prepare_out(inv.out);
    const EpisodeResult result = run_episode(config);
    const std::string arm = arm_label(config.variant);
    write_text_file(inv.out / "scenario.json", scenario_to_json(config));
    write_trace_csv(result.trace, inv.out / "trace.csv");
    write_metrics_json(result.metrics, config.seed, inv.out / "metrics.json");
    write_success_series(result.metrics, config.seed, arm, inv.out / "success_per_cycle.csv");
    write_fault_series(result.metrics, config.seed, arm, inv.out / "fault_response.csv");
    write_error_series(result.trace, arm, inv.out / "error_series.csv");
    if (config.variant == ControllerVariant::adaptive) {
        write_text_file(inv.out / "network.json", to_json_string(result.final_params, config.seed));
    }
    if (!inv.quiet) {
        out << fmt::format("{} / {} seed {}: {} ticks, {} training rounds\n", to_string(config.kind), arm,
                           config.seed, result.trace.records.size(), result.training_rounds);
        print_metrics(out, result.metrics);
    }
    return kExitOk;
}

void write_comparison(const ScenarioConfig& config, const ComparisonReport& report, const fs::path& dir) {
    prepare_out(dir);
    write_text_file(dir / "scenario.json", scenario_to_json(config));
    write_report_json(report, dir / "report.json");
    bool first = true;
    for (const auto* arms : {&report.baseline, &report.adaptive}) {
        const std::string label = arms == &report.baseline ? "baseline" : "adaptive";
        for (const auto& a : *arms) {
            if (!a.metrics) continue;
            write_success_series(*a.metrics, a.seed, label, dir / "success_per_cycle.csv", !first);
            write_fault_series(*a.metrics, a.seed, label, dir / "fault_response.csv", !first);
            first = false;
        }
    }
}

void print_report(std::ostream& out, const ComparisonReport& report) {
    out << fmt::format("{:<26} {:>14} {:>14} {:>12}\n", "metric", "baseline", "adaptive", "ratio");
    for (const auto& s : report.summary) {
        out << fmt::format("{:<26} {:>14} {:>14} {:>12}\n", s.name, describe(s.baseline_mean),
                           describe(s.adaptive_mean), describe(s.ratio));
    }
    for (const auto* arms : {&report.baseline, &report.adaptive}) {
        for (const auto& a : *arms) {
            if (!a.failure.empty()) {
                out << fmt::format("FAILED {} seed {}: {}\n", to_string(a.variant), a.seed, a.failure);
            }
        }
    }
}

int do_compare(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    const ScenarioConfig config = load_config(inv);
    const ComparisonReport report = run_comparison(config);
    write_comparison(config, report, inv.out);
    if (!inv.quiet) print_report(out, report);
    if (!report.ok()) {
        err << "comparison finished with failed runs; see report.json\n";
        return kExitRuntime;
    }
    return kExitOk;
}

struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

std::vector<SweepAxis> read_sweep_axes(const fs::path& path, const ScenarioConfig& base) {
    const auto doc = nlohmann::json::parse(read_text_file(path));
    std::vector<SweepAxis> axes = {
        {"gamma", {base.learning.training.gamma}},
        {"alpha", {base.learning.training.alpha}},
        {"kp", {base.controller.nominal.kp}},
        {"kd", {base.controller.nominal.kd}},
    };
    if (!doc.contains("sweep")) return axes;
    const auto& sweep = doc.at("sweep");
    if (!sweep.is_object()) throw ConfigError("expected an object", "/sweep");
    for (const auto& item : sweep.items()) {
        auto it = std::find_if(axes.begin(), axes.end(), [&](const auto& a) { return a.name == item.key(); });
        if (it == axes.end()) throw ConfigError("unknown sweep parameter", "/sweep/" + item.key());
        try {
            it->values = item.value().get<std::vector<double>>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("expected an array of numbers", "/sweep/" + item.key());
        }
        if (it->values.empty()) throw ConfigError("sweep axis is empty", "/sweep/" + item.key());
    }
    return axes;
}

int do_sweep(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    const ScenarioConfig base = load_config(inv);
    const auto axes = read_sweep_axes(inv.config, base);
    prepare_out(inv.out);

    std::vector<std::size_t> idx(axes.size(), 0);
    bool all_ok = true;
    while (true) {
        ScenarioConfig config = base;
        std::string name;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const double v = axes[a].values[idx[a]];
            if (axes[a].name == "gamma") config.learning.training.gamma = v;
            if (axes[a].name == "alpha") config.learning.training.alpha = v;
            if (axes[a].name == "kp") config.controller.nominal.kp = v;
            if (axes[a].name == "kd") config.controller.nominal.kd = v;
            name += fmt::format("{}{}={}", a == 0 ? "" : "_", axes[a].name, format_number(v));
        }
        config.controller.actions.nominal = config.controller.nominal;
        try {
            config.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(e.detail(), e.path(), fmt::format("sweep point {}", name));
        }
        const ComparisonReport report = run_comparison(config);
        write_comparison(config, report, inv.out / name);
        all_ok = all_ok && report.ok();
        if (!inv.quiet) {
            out << "== " << name << "\n";
            print_report(out, report);
        }

        std::size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++idx[a] < axes[a].values.size()) break;
            idx[a] = 0;
        }
        if (a == axes.size()) break;
    }
    if (!all_ok) {
        err << "sweep finished with failed runs\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int do_gradcheck(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    GradientCheckOptions options;
    if (inv.replicates) options.configurations = *inv.replicates;
    if (inv.seed) options.seed = *inv.seed;
    const auto result = gradient_check(options);
    if (!inv.quiet) {
        out << fmt::format("gradcheck: {} networks, {} entries, {} failures, worst relative error {}\n",
                           result.configurations, result.entries_checked, result.failures,
                           format_number(result.worst_relative_error));
    }
    if (!result.passed()) {
        err << fmt::format("gradcheck failed: {} of {} entries outside tolerance\n", result.failures,
                           result.entries_checked);
        return kExitRuntime;
    }
    return kExitOk;
}

int do_export(const CliInvocation& inv, std::ostream& out) {
    const ScenarioConfig config = load_config(inv);
    if (inv.trace.empty()) throw ConfigError("--trace is required for export");
    const EpisodeTrace trace = read_trace_csv(inv.trace);
    ScenarioConfig replay = config;
    replay.seed = trace.seed;
    const EpisodeMetrics metrics = compute_metrics(trace, replay);
    prepare_out(inv.out);
    const std::string arm = arm_label(config.variant);
    write_metrics_json(metrics, trace.seed, inv.out / "metrics.json");
    write_success_series(metrics, trace.seed, arm, inv.out / "success_per_cycle.csv");
    write_fault_series(metrics, trace.seed, arm, inv.out / "fault_response.csv");
    write_error_series(trace, arm, inv.out / "error_series.csv");
    if (!inv.quiet) print_metrics(out, metrics);
    return kExitOk;
}

} // namespace

int dispatch(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    try {
        switch (inv.subcommand) {
        case Subcommand::run: return do_run(inv, out);
        case Subcommand::compare: return do_compare(inv, out, err);
        case Subcommand::sweep: return do_sweep(inv, out, err);
        case Subcommand::gradcheck: return do_gradcheck(inv, out, err);
        case Subcommand::export_series: return do_export(inv, out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const EpisodeError& e) {
        err << "run failed after " << e.partial_trace().records.size() << " ticks: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"loopforge: closed-loop control simulator and experiment harness"};
    app.require_subcommand(1);
    app.footer(kSchemaHelp);

    CliInvocation inv;
    std::uint64_t seed = 0;
    std::size_t replicates = 0;

    const auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* cfg = sub->add_option("--config", inv.config, "Scenario JSON file");
        if (needs_config) cfg->required();
        sub->add_option("--out", inv.out, "Output directory")->capture_default_str();
        sub->add_option("--seed", seed, "Master seed, overrides the config");
        sub->add_option("--replicates", replicates, "Paired seed replicates (gradcheck: network count)");
        sub->add_flag("--quiet", inv.quiet, "Suppress progress output");
    };

    auto* run = app.add_subcommand("run", "Run one episode and export its trace, metrics and series");
    add_common(run, true);
    auto* compare = app.add_subcommand("compare", "Baseline vs adaptive over paired seeds");
    add_common(compare, true);
    auto* sweep = app.add_subcommand("sweep", "Comparison per point of a gamma/alpha/kp/kd grid");
    add_common(sweep, true);
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of backpropagation");
    add_common(gradcheck, false);
    auto* exp = app.add_subcommand("export", "Recompute metrics and series from a stored trace");
    add_common(exp, true);
    exp->add_option("--trace", inv.trace, "Trace CSV written by `run`")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitConfig;
    }

    if (*run) inv.subcommand = Subcommand::run;
    if (*compare) inv.subcommand = Subcommand::compare;
    if (*sweep) inv.subcommand = Subcommand::sweep;
    if (*gradcheck) inv.subcommand = Subcommand::gradcheck;
    if (*exp) inv.subcommand = Subcommand::export_series;
    for (auto* sub : {run, compare, sweep, gradcheck, exp}) {
        if (!*sub) continue;
        if (sub->count("--seed") > 0) inv.seed = seed;
        if (sub->count("--replicates") > 0) inv.replicates = replicates;
    }
    return dispatch(inv, out, err);
}

} // namespace loopforge::cli
