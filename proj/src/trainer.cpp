#include "posmac/trainer.hpp"

#include <limits>

#include "posmac/errors.hpp"

namespace posmac {

void ReplayBuffer::add(const LabeledSample& s) {
    ++n_seen_;
    if (samples_.size() < capacity_) {
        samples_.push_back(s);
        return;
    }
    const std::uint64_t j = rng_.below(n_seen_);
    if (j < capacity_) samples_[static_cast<std::size_t>(j)] = s;
}

OnlineTrainer::OnlineTrainer(RetrainPolicy policy, TrainParams params, ModelKind kind,
                             std::uint32_t initial_version)
    : policy_(policy),
      params_(params),
      kind_(kind),
      version_(initial_version),
      last_retrain_us_(std::numeric_limits<std::int64_t>::min()),
      replay_(policy.replay_capacity, params.seed) {}

void OnlineTrainer::join(const ClassifierPipeline::FeatureEntry& entry, ClassLabel label,
                         std::int64_t now_us) {
    LabeledSample s;
    s.f = entry.vec.f;
    s.label = label;
    s.flow = entry.vec.flow;
    s.window_index = entry.vec.window_index;
    s.joined_at_us = now_us;
    new_samples_.push_back(s);
    replay_.add(s);

    recent_.push_back(entry.predicted == label);
    while (recent_.size() > policy_.moving_window) recent_.pop_front();
}

void OnlineTrainer::sweep_expired(std::int64_t now_us, JoinStats& stats) {
    for (auto it = pending_.begin(); it != pending_.end();) {
        auto& vec = it->second;
        std::size_t kept = 0;
        for (auto& pf : vec) {
            if (pf.deadline_us >= now_us)
                vec[kept++] = std::move(pf);
            else
                ++stats.expired;
        }
        vec.resize(kept);
        it = vec.empty() ? pending_.erase(it) : std::next(it);
    }
}

JoinStats OnlineTrainer::ingest(std::span<const ClassifierPipeline::FeatureEntry> features,
                                std::span<const LabelEmission> labels, std::int64_t now_us) {
    JoinStats stats;

    for (const LabelEmission& e : labels) {
        const auto [it, inserted] = labels_.try_emplace(e.flow, e.label);
        if (!inserted) {
            ++stats.duplicate_labels;
            continue;
        }
        // a newly learned label releases everything parked for its flow
        if (const auto pit = pending_.find(e.flow); pit != pending_.end()) {
            for (const PendingFeature& pf : pit->second) {
                join(pf.entry, e.label, now_us);
                ++stats.joined;
            }
            pending_.erase(pit);
        }
    }

    for (const auto& entry : features) {
        if (const auto it = labels_.find(entry.vec.flow); it != labels_.end()) {
            join(entry, it->second, now_us);
            ++stats.joined;
        } else {
            pending_[entry.vec.flow].push_back(
                PendingFeature{entry, now_us + policy_.pending_ttl_us});
        }
    }

    sweep_expired(now_us, stats);
    expired_total_ += stats.expired;
    for (const auto& [flow, vec] : pending_) stats.pending_features += vec.size();
    return stats;
}

double OnlineTrainer::moving_accuracy() const {
    if (recent_.empty()) return 1.0;
    std::size_t correct = 0;
    for (bool ok : recent_) correct += ok;
    return static_cast<double>(correct) / static_cast<double>(recent_.size());
}

RetrainDecision OnlineTrainer::should_retrain(std::int64_t now_us) const {
    // rate limit is absolute: nothing fires while the interval is unelapsed
    if (has_retrained_ && now_us - last_retrain_us_ < policy_.min_interval_us) return {};
    if (new_samples_.size() >= policy_.min_new_samples) return {true, "batch"};
    // drift only once the moving window is populated
    if (moving_window_full() && moving_accuracy() < policy_.accuracy_floor)
        return {true, "drift"};
    return {};
}

std::vector<std::uint8_t> OnlineTrainer::retrain(std::int64_t now_us) {
    if (new_samples_.empty() && replay_.size() == 0)
        throw EmptyDataset("retrain: no samples");

    Dataset data(kNumFeatures);
    for (const LabeledSample& s : replay_.samples()) data.add_row(s.f, s.label, 1);
    for (const LabeledSample& s : new_samples_) data.add_row(s.f, s.label, policy_.recency_weight);

    TrainParams params = params_;
    params.seed = derive_seed(params_.seed, version_ + 1);
    const Model model = train_model(kind_, data, params);

    TrainEvent event;
    event.version = version_ + 1;
    event.training_rows = data.total_weight();
    event.new_samples = new_samples_.size();
    event.replay_samples = replay_.size();
    history_.push_back(event);

    ++version_;
    new_samples_.clear();
    last_retrain_us_ = now_us;
    has_retrained_ = true;
    return serialize_model(model, version_);
}

void OnlineTrainer::note_external_train(std::uint32_t version, std::int64_t at_us) {
    version_ = version;
    last_retrain_us_ = at_us;
    has_retrained_ = true;
}

}  // namespace posmac
