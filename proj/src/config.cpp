#include <fstream>
#include <sstream>
#include <string>

#include "posmac/errors.hpp"
#include "posmac/harness.hpp"

namespace posmac {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config: bad boolean for " + key + ": " + v);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": " + v);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": " + v);
    }
}

std::int64_t seconds_to_us(double s) { return static_cast<std::int64_t>(s * 1e6); }

}  // namespace

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    bool saw_pcap = false, saw_synth = false;

    std::istringstream in{std::string(text)};
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("config: bad section at line " + std::to_string(lineno));
            section = t.substr(1, t.size() - 2);
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key=value at line " + std::to_string(lineno));
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const std::string full = section + "." + key;

        if (full == "input.pcap") {
            cfg.pcap_path = value;
            saw_pcap = true;
        } else if (full == "input.sidecar") {
            cfg.sidecar_path = value;
        } else if (full == "input.synthetic") {
            cfg.synthetic = parse_bool(full, value);
            saw_synth = saw_synth || cfg.synthetic;
        } else if (full == "input.flows_per_class") {
            cfg.flows_per_class = parse_u64(full, value);
        } else if (full == "input.duration_s") {
            cfg.duration_s = parse_double(full, value);
        } else if (full == "input.seed") {
            cfg.input_seed = parse_u64(full, value);
        } else if (full == "extractor.window") {
            cfg.window = static_cast<std::uint32_t>(parse_u64(full, value));
        } else if (full == "extractor.idle_timeout_s") {
            cfg.idle_timeout_us = seconds_to_us(parse_double(full, value));
        } else if (full == "model.kind") {
            if (value == "dt")
                cfg.kind = ModelKind::Tree;
            else if (value == "rf")
                cfg.kind = ModelKind::Forest;
            else
                throw ConfigError("config: model.kind must be dt or rf");
        } else if (full == "model.n_trees") {
            cfg.params.n_trees = static_cast<std::uint32_t>(parse_u64(full, value));
        } else if (full == "model.max_depth") {
            cfg.params.max_depth = static_cast<std::uint32_t>(parse_u64(full, value));
        } else if (full == "model.min_samples_split") {
            cfg.params.min_samples_split = static_cast<std::uint32_t>(parse_u64(full, value));
        } else if (full == "model.features_per_split") {
            cfg.params.features_per_split = static_cast<std::uint32_t>(parse_u64(full, value));
        } else if (full == "model.bootstrap") {
            cfg.params.bootstrap = parse_bool(full, value);
        } else if (full == "model.seed") {
            cfg.params.seed = parse_u64(full, value);
        } else if (full == "model.envelope") {
            cfg.initial_envelope = value;
        } else if (full == "model.warmup_fraction") {
            cfg.warmup_fraction = parse_double(full, value);
        } else if (full == "policy.enabled") {
            cfg.retraining = parse_bool(full, value);
        } else if (full == "policy.min_new_samples") {
            cfg.policy.min_new_samples = parse_u64(full, value);
        } else if (full == "policy.accuracy_floor") {
            cfg.policy.accuracy_floor = parse_double(full, value);
        } else if (full == "policy.moving_window") {
            cfg.policy.moving_window = parse_u64(full, value);
        } else if (full == "policy.min_interval_s") {
            cfg.policy.min_interval_us = seconds_to_us(parse_double(full, value));
        } else if (full == "policy.recency_weight") {
            cfg.policy.recency_weight = static_cast<std::uint32_t>(parse_u64(full, value));
        } else if (full == "policy.pending_ttl_s") {
            cfg.policy.pending_ttl_us = seconds_to_us(parse_double(full, value));
        } else if (full == "policy.replay_capacity") {
            cfg.policy.replay_capacity = parse_u64(full, value);
        } else if (full == "labels.latency_s") {
            cfg.label_latency_us = seconds_to_us(parse_double(full, value));
        } else if (full == "labels.reemit_s") {
            cfg.reemit_interval_us = seconds_to_us(parse_double(full, value));
        } else if (full == "replay.speed_factor") {
            cfg.speed_factor = parse_double(full, value);
        } else if (full == "run.workers") {
            cfg.workers = parse_u64(full, value);
        } else if (full == "run.epoch_packets") {
            cfg.epoch_packets = parse_u64(full, value);
        } else if (full == "report.text") {
            cfg.report_text_path = value;
        } else if (full == "report.kv") {
            cfg.report_kv_path = value;
        } else if (full == "report.decision_log") {
            cfg.decision_log_path = value;
        } else if (full == "report.misroute_log") {
            cfg.misroute_log_path = value;
        } else {
            throw ConfigError("config: unknown key " + full);
        }
    }

    if (saw_pcap == cfg.synthetic)
        throw ConfigError("config: exactly one input source required (input.pcap or input.synthetic=true)");
    if (saw_pcap && cfg.sidecar_path.empty())
        throw ConfigError("config: input.sidecar required with input.pcap");
    if (cfg.window == 0) throw ConfigError("config: extractor.window must be >= 1");
    if (cfg.workers == 0) cfg.workers = 1;
    if (cfg.epoch_packets == 0) cfg.epoch_packets = 2048;
    if (cfg.warmup_fraction <= 0 || cfg.warmup_fraction >= 1)
        throw ConfigError("config: model.warmup_fraction must be in (0,1)");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

}  // namespace posmac
