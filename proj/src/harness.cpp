#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>

#include "posmac/errors.hpp"
#include "posmac/harness.hpp"
#include "posmac/replay.hpp"

namespace posmac {

std::vector<TrafficProfile> default_profiles() {
    return {default_profile(ClassLabel::AR), default_profile(ClassLabel::CG),
            default_profile(ClassLabel::Other)};
}

std::vector<LabeledWindow> extract_labeled_windows(const std::vector<Packet>& packets,
                                                   const GroundTruth& truth,
                                                   std::uint32_t window) {
    FeatureExtractor extractor({window});
    std::vector<LabeledWindow> rows;
    for (const Packet& p : packets) {
        if (p.proto != 17) continue;
        if (auto vec = extractor.observe(p)) {
            if (const auto label = truth.lookup(vec->flow))
                rows.push_back(LabeledWindow{*vec, *label});
        }
    }
    return rows;
}

EvalResult eval_envelope(const Model& model, const std::vector<Packet>& packets,
                         const GroundTruth& truth, std::uint32_t window) {
    const auto rows = extract_labeled_windows(packets, truth, window);
    if (rows.empty()) throw EmptyDataset("eval: no labeled windows in input");
    return evaluate(model, Dataset::from_windows(rows));
}

namespace {

struct InitialModel {
    Model model;
    std::uint32_t version = 1;
    std::string reason;  // "bootstrap" or "loaded"
    std::uint64_t training_rows = 0;
};

// Single leaf predicting Other; serves runs whose input has no warmup
// windows (e.g. empty input) so the pipeline always has a model.
Model fallback_model(ModelKind kind) {
    DecisionTree tree;
    TreeNode leaf;
    leaf.is_leaf = 1;
    leaf.counts = {0, 0, 1};
    tree.nodes.push_back(leaf);
    Model m;
    m.kind = kind;
    m.trees.push_back(std::move(tree));
    return m;
}

InitialModel make_initial_model(const RunConfig& cfg, const std::vector<Packet>& packets,
                                const GroundTruth& truth) {
    InitialModel init;
    if (!cfg.initial_envelope.empty()) {
        std::ifstream in(cfg.initial_envelope, std::ios::binary);
        if (!in) throw ConfigError("cannot open envelope " + cfg.initial_envelope);
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
        DeserializedModel d = deserialize_model(bytes);
        init.model = std::move(d.model);
        init.version = d.version;
        init.reason = "loaded";
        return init;
    }

    auto rows = extract_labeled_windows(packets, truth, cfg.window);
    const auto take = static_cast<std::size_t>(
        std::ceil(cfg.warmup_fraction * static_cast<double>(rows.size())));
    rows.resize(std::min(rows.size(), take));
    init.reason = "bootstrap";
    if (rows.empty()) {
        init.model = fallback_model(cfg.kind);
        return init;
    }
    const Dataset data = Dataset::from_windows(rows);
    init.model = train_model(cfg.kind, data, cfg.params);
    init.training_rows = data.total_weight();
    return init;
}

// Per-shard accumulators owned by the worker between barriers.
struct ShardLocal {
    LabelOracle oracle;
    std::vector<LabelEmission> emissions;
    std::vector<double> latency_us;

    ShardLocal(const GroundTruth& truth, LabelOracle::Config cfg) : oracle(truth, cfg) {}
};

// Bounded per-shard handoff. The producer waits for full drains at epoch
// barriers, which is the happens-before edge that lets it touch ShardLocal.
class ShardQueue {
public:
    explicit ShardQueue(std::size_t capacity) : capacity_(capacity) {}

    void push(const Packet* p) {
        std::unique_lock lock(mu_);
        not_full_.wait(lock, [&] { return q_.size() < capacity_; });
        q_.push_back(p);
        not_empty_.notify_one();
    }

    const Packet* pop() {
        std::unique_lock lock(mu_);
        not_empty_.wait(lock, [&] { return !q_.empty() || closed_; });
        if (q_.empty()) return nullptr;
        const Packet* p = q_.front();
        q_.pop_front();
        not_full_.notify_one();
        return p;
    }

    void mark_done() {
        std::lock_guard lock(mu_);
        ++done_;
        drained_.notify_all();
    }

    void wait_drained(std::uint64_t pushed) {
        std::unique_lock lock(mu_);
        drained_.wait(lock, [&] { return done_ >= pushed; });
    }

    void close() {
        std::lock_guard lock(mu_);
        closed_ = true;
        not_empty_.notify_all();
    }

private:
    std::mutex mu_;
    std::condition_variable not_full_, not_empty_, drained_;
    std::deque<const Packet*> q_;
    std::size_t capacity_;
    std::uint64_t done_ = 0;
    bool closed_ = false;
};

}  // namespace

MetricsReport run(const RunConfig& cfg) {
    // --- input -----------------------------------------------------------
    std::vector<Packet> packets;
    GroundTruth truth;
    if (cfg.synthetic) {
        const auto profiles = default_profiles();
        SynthResult synth = synth_mixed(profiles, cfg.flows_per_class, cfg.duration_s,
                                        cfg.input_seed);
        packets = std::move(synth.packets);
        truth = std::move(synth.truth);
    } else {
        packets = read_pcap_file(cfg.pcap_path).packets;
        truth = read_sidecar_file(cfg.sidecar_path);
    }

    // --- components ------------------------------------------------------
    InitialModel init = make_initial_model(cfg, packets, truth);

    ClassifierPipeline::Config pcfg;
    pcfg.window = cfg.window;
    pcfg.shards = cfg.workers;
    pcfg.keep_decision_log = true;
    ClassifierPipeline pipeline(pcfg, init.model, init.version);

    OnlineTrainer trainer(cfg.policy, cfg.params, cfg.kind, init.version);
    const std::int64_t t0 = packets.empty() ? 0 : packets.front().ts_us;
    trainer.note_external_train(init.version, t0);

    const LabelOracle::Config ocfg{cfg.label_latency_us, cfg.reemit_interval_us};
    std::vector<ShardLocal> locals;
    locals.reserve(cfg.workers);
    for (std::size_t i = 0; i < cfg.workers; ++i) locals.emplace_back(truth, ocfg);

    MetricsReport report;
    report.timeline.push_back(VersionEvent{init.version, init.reason, t0, 0.0, 1.0,
                                           init.training_rows});

    using clock = std::chrono::steady_clock;
    const auto wall_start = clock::now();

    // --- epoch barrier work: OT ingest, retrain checks, idle eviction -----
    std::int64_t last_ts = t0;
    auto epoch_work = [&](std::int64_t now_us) {
        std::vector<ClassifierPipeline::FeatureEntry> features;
        std::vector<LabelEmission> labels;
        for (std::size_t s = 0; s < cfg.workers; ++s) {
            auto shard_features = pipeline.drain_features(s);
            features.insert(features.end(), shard_features.begin(), shard_features.end());
            auto due = locals[s].oracle.drain_due(now_us);
            labels.insert(labels.end(), due.begin(), due.end());
            pipeline.flush_expired(s, now_us, cfg.idle_timeout_us);
        }
        const JoinStats stats = trainer.ingest(features, labels, now_us);
        report.joined_samples += stats.joined;
        report.expired_features += stats.expired;
        report.moving_accuracy_series.emplace_back(now_us, trainer.moving_accuracy());

        if (cfg.retraining) {
            const RetrainDecision d = trainer.should_retrain(now_us);
            if (d.retrain) {
                const auto envelope = trainer.retrain(now_us);
                pipeline.swap_model(envelope);
                VersionEvent ev;
                ev.version = trainer.current_version();
                ev.reason = d.reason;
                ev.at_packet_ts_us = now_us;
                ev.wall_s = std::chrono::duration<double>(clock::now() - wall_start).count();
                ev.post_swap_moving_accuracy = trainer.moving_accuracy();
                ev.training_rows = trainer.history().back().training_rows;
                report.timeline.push_back(ev);
            }
        }
    };

    // --- drive the loop ----------------------------------------------------
    if (cfg.workers == 1) {
        ShardLocal& local = locals[0];
        std::uint64_t since_epoch = 0;
        replay(packets, cfg.speed_factor, [&](const Packet& p) {
            const auto c0 = clock::now();
            const auto res = pipeline.process(0, p);
            local.latency_us.emplace_back(
                std::chrono::duration<double, std::micro>(clock::now() - c0).count());
            local.oracle.verify_and_label(p, res.sink, res.pre_decision);
            last_ts = p.ts_us;
            if (++since_epoch >= cfg.epoch_packets) {
                since_epoch = 0;
                epoch_work(last_ts);
            }
        });
        epoch_work(last_ts);
    } else {
        std::vector<std::unique_ptr<ShardQueue>> queues;
        std::vector<std::uint64_t> pushed(cfg.workers, 0);
        for (std::size_t i = 0; i < cfg.workers; ++i)
            queues.push_back(std::make_unique<ShardQueue>(8192));

        std::vector<std::thread> workers;
        for (std::size_t s = 0; s < cfg.workers; ++s) {
            workers.emplace_back([&, s] {
                ShardLocal& local = locals[s];
                while (const Packet* p = queues[s]->pop()) {
                    const auto c0 = clock::now();
                    const auto res = pipeline.process(s, *p);
                    local.latency_us.emplace_back(
                        std::chrono::duration<double, std::micro>(clock::now() - c0).count());
                    local.oracle.verify_and_label(*p, res.sink, res.pre_decision);
                    queues[s]->mark_done();
                }
            });
        }

        auto barrier = [&] {
            for (std::size_t s = 0; s < cfg.workers; ++s) queues[s]->wait_drained(pushed[s]);
        };

        std::uint64_t since_epoch = 0;
        replay(packets, cfg.speed_factor, [&](const Packet& p) {
            const std::size_t s =
                p.proto == 17 ? pipeline.shard_of(flow_key(p)) : 0;
            queues[s]->push(&p);
            ++pushed[s];
            last_ts = p.ts_us;
            if (++since_epoch >= cfg.epoch_packets) {
                since_epoch = 0;
                barrier();
                epoch_work(last_ts);
            }
        });
        barrier();
        for (auto& q : queues) q->close();
        for (auto& w : workers) w.join();
        epoch_work(last_ts);
    }

    report.wall_s = std::chrono::duration<double>(clock::now() - wall_start).count();

    // --- assemble the report ----------------------------------------------
    const auto counters = pipeline.counters();
    report.packets_in = counters.packets_in;
    report.delivered = counters.delivered;
    report.drops = counters.drops;
    report.pre_decision_packets = counters.pre_decision_packets;
    report.windows_classified = counters.windows_classified;
    report.feature_entries_dropped = counters.feature_entries_dropped;
    report.throughput_pps = report.wall_s > 0
                                ? static_cast<double>(counters.packets_in) / report.wall_s
                                : 0.0;

    std::vector<double> latencies;
    for (auto& local : locals) {
        latencies.insert(latencies.end(), local.latency_us.begin(), local.latency_us.end());
        const auto& oc = local.oracle.counters();
        report.misrouted_packets += oc.misrouted;
        report.unknown_flow_packets += oc.unknown_flow;
        report.correctly_routed_packets += oc.correctly_routed;
        auto mis = local.oracle.misroutes();
        report.misroutes.insert(report.misroutes.end(), mis.begin(), mis.end());
    }
    std::sort(report.misroutes.begin(), report.misroutes.end(),
              [](const MisrouteRecord& a, const MisrouteRecord& b) { return a.flow < b.flow; });
    if (!latencies.empty()) {
        double sum = 0.0;
        for (double v : latencies) sum += v;
        report.latency_mean_us = sum / static_cast<double>(latencies.size());
        const auto p95 = static_cast<std::size_t>(0.95 * static_cast<double>(latencies.size()));
        std::nth_element(latencies.begin(),
                         latencies.begin() + static_cast<std::ptrdiff_t>(
                                                 std::min(p95, latencies.size() - 1)),
                         latencies.end());
        report.latency_p95_us = latencies[std::min(p95, latencies.size() - 1)];
    }

    report.decisions = pipeline.decision_log();
    std::uint64_t correct = 0;
    for (const RouteDecision& d : report.decisions) {
        const auto truth_label = truth.lookup(d.flow);
        if (!truth_label) continue;
        ++report.decisions_with_truth;
        report.confusion[label_code(*truth_label)][label_code(d.label)]++;
        auto& [v_correct, v_total] = report.per_version[d.model_version];
        ++v_total;
        if (d.label == *truth_label) {
            ++correct;
            ++v_correct;
        }
    }
    report.accuracy = report.decisions_with_truth > 0
                          ? static_cast<double>(correct) /
                                static_cast<double>(report.decisions_with_truth)
                          : 0.0;
    return report;
}

}  // namespace posmac
