#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "posmac/core.hpp"

namespace posmac {

inline constexpr int kNumFeatures = 8;

// Feature order is part of the training-file and model contracts.
extern const std::array<const char*, kNumFeatures> kFeatureNames;

// Statistics over one completed window of W packets:
// [mean_ps, std_ps, mean_ipi, std_ipi, mean_fs, std_fs, mean_ifi, std_ifi]
// (bytes / microseconds; population std dev).
struct FeatureVector {
    FlowKey flow;
    std::uint64_t window_index = 0;
    std::array<double, kNumFeatures> f{};

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Per-flow window accounting. A frame is the run of RTP packets sharing one
// RTP timestamp, closed by a timestamp change or the marker bit; non-RTP
// packets are their own frames. Frame accumulation spans window boundaries.
// Not thread-safe: all packets of one flow must be observed by one owner.
class FeatureExtractor {
public:
    struct Config {
        std::uint32_t window = 30;  // W packets, non-overlapping
    };

    explicit FeatureExtractor(Config cfg = {}) : cfg_(cfg) {}

    // Feeds one UDP packet; returns a FeatureVector when the packet completes
    // the flow's current window.
    std::optional<FeatureVector> observe(const Packet& p);

    // Evicts flows idle longer than idle_timeout_us; partial windows are
    // discarded. Returns the evicted keys, sorted.
    std::vector<FlowKey> flush_expired(std::int64_t now_us, std::int64_t idle_timeout_us);

    std::size_t active_flows() const { return flows_.size(); }
    const Config& config() const { return cfg_; }

private:
    struct FlowState {
        std::uint64_t window_index = 0;
        std::uint32_t packets_in_window = 0;
        std::int64_t last_pkt_ts_us = 0;
        bool has_last_ts = false;
        std::vector<double> ps, ipi, fs, ifi;
        // open frame group
        bool frame_open = false;
        bool frame_is_rtp = false;
        std::uint32_t frame_rtp_ts = 0;
        double frame_bytes = 0.0;
        std::int64_t frame_first_ts_us = 0;
        // previous completed frame start, spans windows
        bool has_prev_frame = false;
        std::int64_t prev_frame_first_ts_us = 0;
        std::int64_t last_seen_us = 0;
    };

    static void complete_frame(FlowState& st);

    Config cfg_;
    std::unordered_map<FlowKey, FlowState, FlowKeyHash> flows_;
};

// Feature dump CSV (header src_ip,...,window_index,mean_ps,...,std_ifi),
// optionally with a trailing label column — the training-data file format.
struct LabeledWindow {
    FeatureVector vec;
    ClassLabel label = ClassLabel::Other;
};

std::string write_features_csv(const std::vector<FeatureVector>& rows);
std::string write_labeled_csv(const std::vector<LabeledWindow>& rows);
std::vector<LabeledWindow> read_labeled_csv(std::string_view text);
std::vector<LabeledWindow> read_labeled_file(const std::string& path);
void write_labeled_file(const std::string& path, const std::vector<LabeledWindow>& rows);

}  // namespace posmac
