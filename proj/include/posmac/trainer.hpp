#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "posmac/core.hpp"
#include "posmac/forest.hpp"
#include "posmac/label_oracle.hpp"
#include "posmac/pipeline.hpp"
#include "posmac/rng.hpp"

namespace posmac {

struct LabeledSample {
    std::array<double, kNumFeatures> f{};
    ClassLabel label = ClassLabel::Other;
    FlowKey flow;
    std::uint64_t window_index = 0;
    std::int64_t joined_at_us = 0;
};

// Bounded uniform sample of everything ever ingested (reservoir sampling).
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::uint64_t seed)
        : capacity_(capacity), rng_(derive_seed(seed, 0x5e5e)) {}

    void add(const LabeledSample& s);
    const std::vector<LabeledSample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    std::uint64_t ingested() const { return n_seen_; }
    std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    SplitMix64 rng_;
    std::uint64_t n_seen_ = 0;
    std::vector<LabeledSample> samples_;
};

struct RetrainPolicy {
    std::size_t min_new_samples = 500;
    double accuracy_floor = 0.90;
    std::size_t moving_window = 200;  // K joined decisions
    std::int64_t min_interval_us = 10'000'000;
    std::uint32_t recency_weight = 2;
    std::int64_t pending_ttl_us = 60'000'000;
    std::size_t replay_capacity = 5000;
};

struct JoinStats {
    std::uint64_t joined = 0;
    std::uint64_t expired = 0;
    std::uint64_t duplicate_labels = 0;
    std::uint64_t pending_features = 0;  // still waiting after this ingest
};

struct RetrainDecision {
    bool retrain = false;
    std::string reason;  // "batch" or "drift"
};

struct TrainEvent {
    std::uint32_t version = 0;
    std::uint64_t training_rows = 0;  // weighted
    std::uint64_t new_samples = 0;
    std::uint64_t replay_samples = 0;
};

// The OT: joins the TC's feature batches with the servers' label emissions,
// fires retrains under the policy's triggers, and produces the next
// versioned envelope. Retraining is warm-data: reservoir history at weight 1
// plus the new batch at recency weight, fresh trees each time.
class OnlineTrainer {
public:
    OnlineTrainer(RetrainPolicy policy, TrainParams params, ModelKind kind,
                  std::uint32_t initial_version = 0);

    JoinStats ingest(std::span<const ClassifierPipeline::FeatureEntry> features,
                     std::span<const LabelEmission> labels, std::int64_t now_us);

    RetrainDecision should_retrain(std::int64_t now_us) const;

    // Trains and returns the envelope for version current+1; clears the
    // new-sample set. Single-flight by construction (synchronous call).
    std::vector<std::uint8_t> retrain(std::int64_t now_us);

    // Accuracy of the pipeline's decisions against joined truth labels over
    // the last K windows; 1.0 until anything is joined.
    double moving_accuracy() const;
    bool moving_window_full() const { return recent_.size() >= policy_.moving_window; }

    std::uint32_t current_version() const { return version_; }
    void note_external_train(std::uint32_t version, std::int64_t at_us);  // warmup bootstrap
    std::size_t new_sample_count() const { return new_samples_.size(); }
    const ReplayBuffer& replay_buffer() const { return replay_; }
    const std::vector<TrainEvent>& history() const { return history_; }
    const std::vector<LabeledSample>& new_samples() const { return new_samples_; }

private:
    struct PendingFeature {
        ClassifierPipeline::FeatureEntry entry;
        std::int64_t deadline_us = 0;
    };

    void join(const ClassifierPipeline::FeatureEntry& entry, ClassLabel label,
              std::int64_t now_us);
    void sweep_expired(std::int64_t now_us, JoinStats& stats);

    RetrainPolicy policy_;
    TrainParams params_;
    ModelKind kind_;
    std::uint32_t version_;
    std::int64_t last_retrain_us_;
    bool has_retrained_ = false;

    std::unordered_map<FlowKey, ClassLabel, FlowKeyHash> labels_;
    std::unordered_map<FlowKey, std::vector<PendingFeature>, FlowKeyHash> pending_;
    std::vector<LabeledSample> new_samples_;
    ReplayBuffer replay_;
    std::deque<bool> recent_;  // decision-correct ring, newest at back
    std::uint64_t expired_total_ = 0;
    std::vector<TrainEvent> history_;
};

}  // namespace posmac
