#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "posmac/core.hpp"
#include "posmac/features.hpp"
#include "posmac/forest.hpp"

namespace posmac {

enum class SinkId : std::uint8_t { AR_SERVER = 0, CG_SERVER = 1, OTHER_SERVER = 2 };

inline SinkId sink_for(ClassLabel l) { return static_cast<SinkId>(label_code(l)); }
inline ClassLabel label_of(SinkId s) { return static_cast<ClassLabel>(static_cast<std::uint8_t>(s)); }
const char* sink_name(SinkId s);

struct RouteDecision {
    FlowKey flow;
    ClassLabel label = ClassLabel::Other;
    double confidence = 0.0;
    std::uint32_t model_version = 0;
    std::uint64_t window_index = 0;
    std::int64_t decided_at_us = 0;
};

// The TC: per-flow windows from the extractor are classified with the
// current model; routing is sticky per flow with latest-decision-wins.
// Flows are sharded by key hash; each shard's state is confined to one
// caller thread, while the model handle is shared and swapped atomically.
class ClassifierPipeline {
public:
    struct Config {
        std::uint32_t window = 30;
        std::size_t shards = 1;
        std::size_t feature_queue_capacity = 65536;  // entries per shard
        bool keep_decision_log = false;
    };

    struct RouteResult {
        SinkId sink = SinkId::OTHER_SERVER;
        bool pre_decision = false;
        std::optional<RouteDecision> decision;
    };

    // Feature batch entry on the trainer flow: the window's vector plus the
    // decision made for it (the trainer's drift detector compares these
    // against the oracle's labels).
    struct FeatureEntry {
        FeatureVector vec;
        ClassLabel predicted = ClassLabel::Other;
        std::uint32_t model_version = 0;
    };

    struct Counters {
        std::uint64_t packets_in = 0;
        std::array<std::uint64_t, 3> delivered{};
        std::uint64_t drops = 0;  // non-UDP guard
        std::uint64_t pre_decision_packets = 0;
        std::uint64_t windows_classified = 0;
        std::uint64_t feature_entries_dropped = 0;
    };

    ClassifierPipeline(Config cfg, Model initial_model, std::uint32_t initial_version);

    std::size_t shard_count() const { return shards_.size(); }
    std::size_t shard_of(const FlowKey& key) const;

    // Must be called with the shard that owns the packet's flow; one thread
    // per shard at a time.
    RouteResult process(std::size_t shard, const Packet& p);

    // Single-caller convenience (dispatches by flow hash).
    RouteResult classify_and_route(const Packet& p);

    // Atomic publication; rejects versions <= current. Returns new version.
    std::uint32_t swap_model(std::span<const std::uint8_t> envelope);

    std::uint32_t current_version() const;

    // Drains one shard's pending feature entries (bounded queue; entries
    // beyond capacity were dropped and counted).
    std::vector<FeatureEntry> drain_features(std::size_t shard);

    // Evicts idle flows from one shard's extractor and decision cache.
    std::vector<FlowKey> flush_expired(std::size_t shard, std::int64_t now_us,
                                       std::int64_t idle_timeout_us);

    Counters counters() const;  // aggregated over shards
    std::vector<RouteDecision> decision_log() const;  // merged, decision order per shard

private:
    struct ModelHandle {
        Model model;
        std::uint32_t version = 0;
    };

    struct CachedDecision {
        ClassLabel label;
    };

    struct Shard {
        FeatureExtractor extractor;
        std::unordered_map<FlowKey, CachedDecision, FlowKeyHash> routes;
        std::deque<FeatureEntry> feature_queue;
        Counters counters;
        std::vector<RouteDecision> log;

        explicit Shard(FeatureExtractor::Config cfg) : extractor(cfg) {}
    };

    std::shared_ptr<const ModelHandle> handle() const;

    Config cfg_;
    std::vector<std::unique_ptr<Shard>> shards_;
    std::shared_ptr<const ModelHandle> model_;  // accessed via atomic_load/store
    mutable std::mutex swap_mu_;
};

std::string write_decision_csv(const std::vector<RouteDecision>& decisions);

}  // namespace posmac
