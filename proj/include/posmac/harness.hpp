#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "posmac/core.hpp"
#include "posmac/forest.hpp"
#include "posmac/label_oracle.hpp"
#include "posmac/pcap.hpp"
#include "posmac/pipeline.hpp"
#include "posmac/synth.hpp"
#include "posmac/trainer.hpp"

namespace posmac {

// Whole-loop configuration, loadable from a flat INI file (see README for
// the key table). Exactly one input source: pcap+sidecar or synthetic.
struct RunConfig {
    // [input]
    std::string pcap_path;
    std::string sidecar_path;
    bool synthetic = false;
    std::size_t flows_per_class = 10;
    double duration_s = 30.0;
    std::uint64_t input_seed = 42;

    // [extractor]
    std::uint32_t window = 30;
    std::int64_t idle_timeout_us = 30'000'000;

    // [model]
    ModelKind kind = ModelKind::Forest;
    TrainParams params;
    std::string initial_envelope;  // empty = warmup bootstrap
    double warmup_fraction = 0.2;

    // [policy]
    bool retraining = true;
    RetrainPolicy policy;

    // [labels]
    std::int64_t label_latency_us = 0;
    std::int64_t reemit_interval_us = 0;

    // [replay]
    double speed_factor = 0.0;

    // [run]
    std::size_t workers = 1;
    std::size_t epoch_packets = 2048;  // OT ingest / retrain-check cadence

    // [report]
    std::string report_text_path;
    std::string report_kv_path;
    std::string decision_log_path;
    std::string misroute_log_path;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(std::string_view text);

struct VersionEvent {
    std::uint32_t version = 0;
    std::string reason;  // "bootstrap", "loaded", "batch", "drift"
    std::int64_t at_packet_ts_us = 0;
    double wall_s = 0.0;
    double post_swap_moving_accuracy = 1.0;
    std::uint64_t training_rows = 0;
};

struct MetricsReport {
    // conservation
    std::uint64_t packets_in = 0;
    std::array<std::uint64_t, 3> delivered{};
    std::uint64_t drops = 0;
    std::uint64_t pre_decision_packets = 0;

    // classification quality (per-window decisions vs ground truth)
    std::uint64_t windows_classified = 0;
    std::uint64_t decisions_with_truth = 0;
    double accuracy = 0.0;
    std::array<std::array<std::uint64_t, 3>, 3> confusion{};  // [true][pred]
    std::map<std::uint32_t, std::pair<std::uint64_t, std::uint64_t>> per_version;  // correct,total

    // performance (wall clock; excluded from determinism comparisons)
    double throughput_pps = 0.0;
    double latency_mean_us = 0.0;
    double latency_p95_us = 0.0;
    double wall_s = 0.0;

    // online loop
    std::vector<VersionEvent> timeline;
    std::vector<std::pair<std::int64_t, double>> moving_accuracy_series;  // (ts, acc) per epoch
    std::uint64_t joined_samples = 0;
    std::uint64_t expired_features = 0;
    std::uint64_t feature_entries_dropped = 0;
    std::uint64_t misrouted_packets = 0;
    std::uint64_t unknown_flow_packets = 0;
    std::uint64_t correctly_routed_packets = 0;

    std::vector<RouteDecision> decisions;  // retained when a log path is set or asked for
    std::vector<MisrouteRecord> misroutes;
};

// Executes PCAP Pool -> TC -> APS -> OT to input exhaustion. Decision-
// dependent fields are a pure function of (config, seed) at speed_factor 0.
MetricsReport run(const RunConfig& config);

std::string format_report_text(const MetricsReport& r);
std::string format_report_kv(const MetricsReport& r);
void write_report_files(const RunConfig& config, const MetricsReport& r);

// Offline helpers shared by the CLI subcommands.
std::vector<TrafficProfile> default_profiles();
std::vector<LabeledWindow> extract_labeled_windows(const std::vector<Packet>& packets,
                                                   const GroundTruth& truth,
                                                   std::uint32_t window);
EvalResult eval_envelope(const Model& model, const std::vector<Packet>& packets,
                         const GroundTruth& truth, std::uint32_t window);

}  // namespace posmac
