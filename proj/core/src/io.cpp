#include "loopforge/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <fmt/format.h>
#include <json.hpp>

namespace loopforge {

using nlohmann::json;

std::string format_number(double value) { return fmt::format("{:.9g}", value); }

namespace {

double round9(double value) {
    if (!std::isfinite(value)) return value;
    return std::stod(format_number(value));
}

json number9(double value) { return round9(value); }

json optional9(const std::optional<double>& value) {
    return value ? json(round9(*value)) : json(nullptr);
}

std::string round_trip(double value) { return fmt::format("{:.17g}", value); }

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

// Best-effort line of a JSON pointer: follows each object key in document order.
std::size_t line_of_pointer(const std::string& text, const std::string& pointer) {
    std::size_t pos = 0;
    bool found = false;
    std::stringstream ss(pointer);
    std::string token;
    while (std::getline(ss, token, '/')) {
        if (token.empty() || std::all_of(token.begin(), token.end(), ::isdigit)) continue;
        const auto at = text.find("\"" + token + "\"", pos);
        if (at == std::string::npos) break;
        pos = at;
        found = true;
    }
    return found ? line_of_offset(text, pos) : 0;
}

// Strict reader over one JSON object: rejects unknown keys and reports the
// pointer of any field with the wrong type or range.
class Section {
public:
    Section(const json& node, std::string pointer) : node_(node), pointer_(std::move(pointer)) {
        if (!node_.is_object()) throw ConfigError("expected an object", pointer_);
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return node_.contains(key);
    }

    std::string at(const std::string& key) const { return pointer_ + "/" + key; }

    template <typename T>
    void read(const std::string& key, T& out) {
        if (!has(key)) return;
        if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
            if (!node_.at(key).is_number_unsigned()) {
                throw ConfigError("expected a non-negative integer", at(key));
            }
        }
        try {
            out = node_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("wrong type", at(key));
        }
    }

    template <typename T>
    T require(const std::string& key) {
        if (!has(key)) throw ConfigError("missing required field", at(key));
        T out{};
        read(key, out);
        return out;
    }

    const json& child(const std::string& key) {
        seen_.insert(key);
        return node_.at(key);
    }

    void finish() const {
        for (const auto& item : node_.items()) {
            if (!seen_.count(item.key())) throw ConfigError("unknown field", at(item.key()));
        }
    }

private:
    const json& node_;
    std::string pointer_;
    std::set<std::string> seen_;
};

void read_scenario_section(Section& s, ScenarioConfig& cfg) {
    std::string kind = std::string(to_string(cfg.kind));
    s.read("kind", kind);
    try {
        cfg.kind = parse_scenario_kind(kind);
    } catch (const ConfigError&) {
        throw ConfigError(fmt::format("unknown scenario kind '{}'", kind), s.at("kind"));
    }
    cfg.setpoint.levels = cfg.kind == ScenarioKind::tracking ? std::vector<double>{0.5, -0.5}
                                                            : std::vector<double>{0.0};
    std::string variant = std::string(to_string(cfg.variant));
    s.read("variant", variant);
    try {
        cfg.variant = parse_controller_variant(variant);
    } catch (const ConfigError&) {
        throw ConfigError(fmt::format("unknown controller variant '{}'", variant), s.at("variant"));
    }
    s.read("duration", cfg.duration);
    s.read("cycles", cfg.cycles);
    s.read("seed", cfg.seed);
    s.read("replicates", cfg.replicates);
    s.read("success_tolerance", cfg.success_tolerance);
    s.read("success_tail_fraction", cfg.success_tail_fraction);
    s.read("recovery_hold", cfg.recovery_hold);
    if (s.has("setpoint")) {
        Section sp(s.child("setpoint"), s.at("setpoint"));
        sp.read("levels", cfg.setpoint.levels);
        sp.finish();
    }
    s.finish();
}

void read_plant_section(Section& s, ScenarioConfig& cfg) {
    s.read("inertia", cfg.plant.inertia);
    s.read("friction", cfg.plant.friction);
    s.read("dt", cfg.plant.dt);
    s.read("control_period_steps", cfg.control_period_steps);
    if (s.has("thermal")) {
        Section th(s.child("thermal"), s.at("thermal"));
        th.read("ambient", cfg.thermal.ambient);
        th.read("heating", cfg.thermal.heating);
        th.read("time_constant", cfg.thermal.time_constant);
        th.finish();
        cfg.thermal.temperature = cfg.thermal.ambient;
    }
    s.finish();
}

void read_controller_section(Section& s, ScenarioConfig& cfg) {
    if (s.has("gains")) {
        Section g(s.child("gains"), s.at("gains"));
        g.read("kp", cfg.controller.nominal.kp);
        g.read("kd", cfg.controller.nominal.kd);
        g.finish();
    }
    s.read("tau_max", cfg.controller.tau_max);
    ActionTable table = ActionTable::standard(cfg.controller.nominal);
    if (s.has("gain_scale_limits")) {
        std::vector<double> limits;
        s.read("gain_scale_limits", limits);
        if (limits.size() != 2) throw ConfigError("expected [min, max]", s.at("gain_scale_limits"));
        table.min_scale = limits[0];
        table.max_scale = limits[1];
    }
    if (s.has("actions")) {
        const auto& list = s.child("actions");
        if (!list.is_array()) throw ConfigError("expected an array", s.at("actions"));
        table.entries.clear();
        for (std::size_t i = 0; i < list.size(); ++i) {
            Section a(list[i], fmt::format("{}/{}", s.at("actions"), i));
            ActionEntry entry;
            entry.name = a.require<std::string>("name");
            a.read("kp_scale", entry.kp_scale);
            a.read("kd_scale", entry.kd_scale);
            a.read("setpoint_offset", entry.setpoint_offset);
            a.read("reset", entry.reset);
            a.finish();
            table.entries.push_back(std::move(entry));
        }
    }
    cfg.controller.actions = std::move(table);
    s.finish();
}

void read_training_section(Section& s, ScenarioConfig& cfg) {
    auto& l = cfg.learning;
    s.read("gamma", l.training.gamma);
    s.read("alpha", l.training.alpha);
    s.read("epochs", l.training.epochs);
    s.read("epsilon", l.epsilon);
    s.read("epsilon_decay", l.epsilon_decay);
    s.read("train_every_cycles", l.train_every_cycles);
    s.read("decision_period_ticks", l.decision_period_ticks);
    if (s.has("reward")) {
        Section r(s.child("reward"), s.at("reward"));
        r.read("error", l.reward.error);
        r.read("energy", l.reward.energy);
        r.read("fault", l.reward.fault);
        r.finish();
    }
    s.finish();
}

ScenarioConfig parse_document(const json& doc) {
    Section root(doc, "");
    const int version = root.require<int>("format_version");
    if (version != kScenarioFormatVersion) {
        throw ConfigError(fmt::format("unsupported format_version {}", version), "/format_version");
    }
    ScenarioConfig cfg;
    {
        if (!root.has("scenario")) throw ConfigError("missing required section", "/scenario");
        Section s(root.child("scenario"), "/scenario");
        read_scenario_section(s, cfg);
    }
    if (root.has("plant")) {
        Section s(root.child("plant"), "/plant");
        read_plant_section(s, cfg);
    }
    if (root.has("sensing")) {
        Section s(root.child("sensing"), "/sensing");
        s.read("noise", cfg.sensing.noise_std);
        s.read("calibration_frames", cfg.sensing.calibration_frames);
        s.read("calibration_amplitude", cfg.sensing.calibration_amplitude);
        s.finish();
    }
    if (root.has("disturbance")) {
        Section s(root.child("disturbance"), "/disturbance");
        s.read("bias_std", cfg.disturbance.bias_std);
        s.read("vibration_amplitude", cfg.disturbance.vibration_amplitude);
        s.read("vibration_frequency", cfg.disturbance.vibration_frequency);
        s.read("noise_std", cfg.disturbance.noise_std);
        s.finish();
    }
    if (root.has("faults")) {
        const auto& list = root.child("faults");
        if (!list.is_array()) throw ConfigError("expected an array", "/faults");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string ptr = fmt::format("/faults/{}", i);
            Section f(list[i], ptr);
            FaultEvent event;
            event.onset = f.require<double>("onset");
            event.duration = f.require<double>("duration");
            const auto kind = f.require<std::string>("kind");
            try {
                event.kind = parse_fault_kind(kind);
            } catch (const ConfigError& e) {
                throw ConfigError(e.detail(), f.at("kind"));
            }
            event.magnitude = f.require<double>("magnitude");
            f.finish();
            cfg.faults.push_back(event);
        }
    }
    if (root.has("controller")) {
        Section s(root.child("controller"), "/controller");
        read_controller_section(s, cfg);
    }
    if (root.has("network")) {
        Section s(root.child("network"), "/network");
        s.read("hidden", cfg.network.hidden);
        s.finish();
    }
    if (root.has("training")) {
        Section s(root.child("training"), "/training");
        read_training_section(s, cfg);
    }
    // Parameter grid for the CLI sweep; not part of a single scenario.
    root.has("sweep");
    root.finish();
    cfg.validate();
    return cfg;
}

} // namespace

ScenarioConfig parse_scenario(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
        const std::size_t line = line_of_offset(text, offset);
        const std::size_t line_start = text.rfind('\n', offset == 0 ? 0 : offset - 1);
        const std::size_t column = line_start == std::string::npos ? offset + 1 : offset - line_start;
        throw ConfigError(fmt::format("malformed JSON: {}", e.what()), {},
                          fmt::format("line {}, column {}", line, column));
    }
    try {
        return parse_document(doc);
    } catch (const ConfigError& e) {
        const std::size_t line = line_of_pointer(text, e.path());
        if (line == 0) throw;
        throw ConfigError(e.detail(), e.path(), fmt::format("line {}", line));
    }
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_scenario(buffer.str());
    } catch (const ConfigError& e) {
        const std::string where =
            e.location().empty() ? path.string() : fmt::format("{}: {}", path.string(), e.location());
        throw ConfigError(e.detail(), e.path(), where);
    }
}

std::string scenario_to_json(const ScenarioConfig& c) {
    json doc;
    doc["format_version"] = kScenarioFormatVersion;
    doc["scenario"] = {{"kind", to_string(c.kind)},
                       {"variant", to_string(c.variant)},
                       {"duration", c.duration},
                       {"cycles", c.cycles},
                       {"seed", c.seed},
                       {"replicates", c.replicates},
                       {"success_tolerance", c.success_tolerance},
                       {"success_tail_fraction", c.success_tail_fraction},
                       {"recovery_hold", c.recovery_hold},
                       {"setpoint", {{"levels", c.setpoint.levels}}}};
    doc["plant"] = {{"inertia", c.plant.inertia},
                    {"friction", c.plant.friction},
                    {"dt", c.plant.dt},
                    {"control_period_steps", c.control_period_steps},
                    {"thermal",
                     {{"ambient", c.thermal.ambient},
                      {"heating", c.thermal.heating},
                      {"time_constant", c.thermal.time_constant}}}};
    doc["sensing"] = {{"noise", c.sensing.noise_std},
                      {"calibration_frames", c.sensing.calibration_frames},
                      {"calibration_amplitude", c.sensing.calibration_amplitude}};
    doc["disturbance"] = {{"bias_std", c.disturbance.bias_std},
                          {"vibration_amplitude", c.disturbance.vibration_amplitude},
                          {"vibration_frequency", c.disturbance.vibration_frequency},
                          {"noise_std", c.disturbance.noise_std}};
    auto faults = json::array();
    for (const auto& f : c.faults) {
        faults.push_back({{"onset", f.onset},
                          {"duration", f.duration},
                          {"kind", to_string(f.kind)},
                          {"magnitude", f.magnitude}});
    }
    doc["faults"] = std::move(faults);
    auto actions = json::array();
    for (const auto& a : c.controller.actions.entries) {
        actions.push_back({{"name", a.name},
                           {"kp_scale", a.kp_scale},
                           {"kd_scale", a.kd_scale},
                           {"setpoint_offset", a.setpoint_offset},
                           {"reset", a.reset}});
    }
    doc["controller"] = {{"gains", {{"kp", c.controller.nominal.kp}, {"kd", c.controller.nominal.kd}}},
                         {"tau_max", c.controller.tau_max},
                         {"gain_scale_limits",
                          {c.controller.actions.min_scale, c.controller.actions.max_scale}},
                         {"actions", std::move(actions)}};
    doc["network"] = {{"hidden", c.network.hidden}};
    const auto& l = c.learning;
    doc["training"] = {{"gamma", l.training.gamma},
                       {"alpha", l.training.alpha},
                       {"epochs", l.training.epochs},
                       {"epsilon", l.epsilon},
                       {"epsilon_decay", l.epsilon_decay},
                       {"train_every_cycles", l.train_every_cycles},
                       {"decision_period_ticks", l.decision_period_ticks},
                       {"reward",
                        {{"error", l.reward.error}, {"energy", l.reward.energy}, {"fault", l.reward.fault}}}};
    return doc.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ExportError(fmt::format("cannot open '{}' for writing", path.string()));
    out << content;
    out.flush();
    if (!out) throw ExportError(fmt::format("failed writing '{}'", path.string()));
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ExportError(fmt::format("cannot open '{}' for reading", path.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

namespace {

constexpr const char* kTraceHeader =
    "seed,time,q,q_dot,q_d,tau,action,reward,energy,useful_work,fault_active";

void append_to(const std::filesystem::path& path, const std::string& header, const std::string& body,
               bool append) {
    const bool fresh = !append || !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::binary | (fresh ? std::ios::trunc : std::ios::app));
    if (!out) throw ExportError(fmt::format("cannot open '{}' for writing", path.string()));
    if (fresh) out << header << '\n';
    out << body;
    out.flush();
    if (!out) throw ExportError(fmt::format("failed writing '{}'", path.string()));
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

} // namespace

void write_trace_csv(const EpisodeTrace& trace, const std::filesystem::path& path) {
    std::string body;
    body.reserve(trace.records.size() * 160);
    for (const auto& r : trace.records) {
        body += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", trace.seed, round_trip(r.time),
                            round_trip(r.q), round_trip(r.q_dot), round_trip(r.q_d), round_trip(r.tau),
                            r.action, round_trip(r.reward), round_trip(r.energy),
                            round_trip(r.useful_work), r.fault_active ? 1 : 0);
    }
    append_to(path, kTraceHeader, body, false);
}

EpisodeTrace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ExportError(fmt::format("cannot open trace '{}'", path.string()));
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader) {
        throw ExportError(fmt::format("'{}' is not a trace CSV (unexpected header)", path.string()));
    }
    EpisodeTrace trace;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 11) {
            throw ExportError(fmt::format("{}:{}: expected 11 columns, found {}", path.string(), line_no,
                                          cells.size()));
        }
        try {
            trace.seed = std::stoull(cells[0]);
            TraceRecord r;
            r.time = std::stod(cells[1]);
            r.q = std::stod(cells[2]);
            r.q_dot = std::stod(cells[3]);
            r.q_d = std::stod(cells[4]);
            r.tau = std::stod(cells[5]);
            r.action = std::stoull(cells[6]);
            r.reward = std::stod(cells[7]);
            r.energy = std::stod(cells[8]);
            r.useful_work = std::stod(cells[9]);
            r.fault_active = cells[10] == "1";
            trace.records.push_back(r);
        } catch (const std::exception&) {
            throw ExportError(fmt::format("{}:{}: unparsable value", path.string(), line_no));
        }
    }
    return trace;
}

namespace {

json metrics_json(const EpisodeMetrics& m) {
    json doc;
    doc["success_rate"] = number9(m.success_rate);
    doc["mean_fault_response"] = optional9(m.mean_fault_response);
    doc["positional_error_variance"] = number9(m.positional_error_variance);
    doc["energy_per_task"] = number9(m.energy_per_task);
    doc["efficiency"] = optional9(m.efficiency);
    doc["cycle_success"] = m.cycle_success;
    auto faults = json::array();
    for (const auto& f : m.fault_responses) {
        faults.push_back({{"onset", number9(f.onset)},
                          {"response_time", number9(f.response_time)},
                          {"recovered", f.recovered}});
    }
    doc["fault_responses"] = std::move(faults);
    return doc;
}

std::optional<double> optional_from(const json& node) {
    if (node.is_null()) return std::nullopt;
    return node.get<double>();
}

EpisodeMetrics metrics_from(const json& doc) {
    EpisodeMetrics m;
    m.success_rate = doc.at("success_rate").get<double>();
    m.mean_fault_response = optional_from(doc.at("mean_fault_response"));
    m.positional_error_variance = doc.at("positional_error_variance").get<double>();
    m.energy_per_task = doc.at("energy_per_task").get<double>();
    m.efficiency = optional_from(doc.at("efficiency"));
    m.cycle_success = doc.at("cycle_success").get<std::vector<bool>>();
    for (const auto& f : doc.at("fault_responses")) {
        m.fault_responses.push_back({f.at("onset").get<double>(), f.at("response_time").get<double>(),
                                     f.at("recovered").get<bool>()});
    }
    return m;
}

} // namespace

std::string metrics_to_json(const EpisodeMetrics& metrics, std::uint64_t seed) {
    json doc = metrics_json(metrics);
    doc["format_version"] = kScenarioFormatVersion;
    doc["seed"] = seed;
    return doc.dump(2) + "\n";
}

EpisodeMetrics metrics_from_json(const std::string& text) {
    try {
        return metrics_from(json::parse(text));
    } catch (const json::exception& e) {
        throw ExportError(fmt::format("invalid metrics JSON: {}", e.what()));
    }
}

void write_metrics_json(const EpisodeMetrics& metrics, std::uint64_t seed,
                        const std::filesystem::path& path) {
    write_text_file(path, metrics_to_json(metrics, seed));
}

EpisodeMetrics read_metrics_json(const std::filesystem::path& path) {
    return metrics_from_json(read_text_file(path));
}

std::string report_to_json(const ComparisonReport& report) {
    json doc;
    doc["format_version"] = kScenarioFormatVersion;
    doc["kind"] = to_string(report.kind);
    doc["seeds"] = report.seeds;
    doc["ok"] = report.ok();
    auto summary = json::array();
    for (const auto& s : report.summary) {
        summary.push_back({{"metric", s.name},
                           {"baseline_mean", optional9(s.baseline_mean)},
                           {"baseline_variance", optional9(s.baseline_variance)},
                           {"adaptive_mean", optional9(s.adaptive_mean)},
                           {"adaptive_variance", optional9(s.adaptive_variance)},
                           {"ratio", optional9(s.ratio)},
                           {"difference", optional9(s.difference)}});
    }
    doc["summary"] = std::move(summary);
    auto runs = json::array();
    const auto add = [&runs](const std::vector<ArmOutcome>& arms, const char* arm) {
        for (const auto& a : arms) {
            json run{{"arm", arm}, {"variant", to_string(a.variant)}, {"seed", a.seed}};
            run["metrics"] = a.metrics ? metrics_json(*a.metrics) : json(nullptr);
            if (!a.failure.empty()) run["failure"] = a.failure;
            runs.push_back(std::move(run));
        }
    };
    add(report.baseline, "baseline");
    add(report.adaptive, "adaptive");
    doc["runs"] = std::move(runs);
    return doc.dump(2) + "\n";
}

void write_report_json(const ComparisonReport& report, const std::filesystem::path& path) {
    write_text_file(path, report_to_json(report));
}

void write_success_series(const EpisodeMetrics& metrics, std::uint64_t seed, const std::string& arm,
                          const std::filesystem::path& path, bool append) {
    std::string body;
    for (std::size_t c = 0; c < metrics.cycle_success.size(); ++c) {
        body += fmt::format("{},{},{},{}\n", seed, arm, c, metrics.cycle_success[c] ? 1 : 0);
    }
    append_to(path, "seed,arm,cycle,success", body, append);
}

void write_fault_series(const EpisodeMetrics& metrics, std::uint64_t seed, const std::string& arm,
                        const std::filesystem::path& path, bool append) {
    std::string body;
    for (std::size_t i = 0; i < metrics.fault_responses.size(); ++i) {
        const auto& f = metrics.fault_responses[i];
        body += fmt::format("{},{},{},{},{},{}\n", seed, arm, i, format_number(f.onset),
                            format_number(f.response_time), f.recovered ? 1 : 0);
    }
    append_to(path, "seed,arm,fault,onset,response_time,recovered", body, append);
}

void write_error_series(const EpisodeTrace& trace, const std::string& arm,
                        const std::filesystem::path& path, bool append) {
    std::string body;
    body.reserve(trace.records.size() * 40);
    for (const auto& r : trace.records) {
        body += fmt::format("{},{},{},{}\n", trace.seed, arm, format_number(r.time),
                            format_number(r.error()));
    }
    append_to(path, "seed,arm,time,error", body, append);
}

} // namespace loopforge
