#include "posmac/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "posmac/errors.hpp"

namespace posmac {

const char* sink_name(SinkId s) {
    switch (s) {
        case SinkId::AR_SERVER: return "AR_SERVER";
        case SinkId::CG_SERVER: return "CG_SERVER";
        case SinkId::OTHER_SERVER: return "OTHER_SERVER";
    }
    return "OTHER_SERVER";
}

ClassifierPipeline::ClassifierPipeline(Config cfg, Model initial_model,
                                       std::uint32_t initial_version)
    : cfg_(cfg) {
    if (cfg_.shards == 0) cfg_.shards = 1;
    for (std::size_t i = 0; i < cfg_.shards; ++i)
        shards_.push_back(std::make_unique<Shard>(FeatureExtractor::Config{cfg_.window}));
    auto handle = std::make_shared<ModelHandle>();
    handle->model = std::move(initial_model);
    handle->version = initial_version;
    std::atomic_store(&model_, std::shared_ptr<const ModelHandle>(std::move(handle)));
}

std::shared_ptr<const ClassifierPipeline::ModelHandle> ClassifierPipeline::handle() const {
    return std::atomic_load(&model_);
}

std::size_t ClassifierPipeline::shard_of(const FlowKey& key) const {
    return FlowKeyHash{}(key) % shards_.size();
}

ClassifierPipeline::RouteResult ClassifierPipeline::process(std::size_t shard_idx,
                                                            const Packet& p) {
    Shard& shard = *shards_[shard_idx];
    ++shard.counters.packets_in;

    RouteResult res;
    if (p.proto != 17) {
        ++shard.counters.drops;
        res.sink = SinkId::OTHER_SERVER;
        res.pre_decision = true;
        return res;
    }

    const FlowKey key = flow_key(p);

    if (auto vec = shard.extractor.observe(p)) {
        const auto model = handle();
        const Prediction pred = model->model.predict(vec->f);
        ++shard.counters.windows_classified;

        RouteDecision decision;
        decision.flow = key;
        decision.label = pred.label;
        decision.confidence = pred.confidence;
        decision.model_version = model->version;
        decision.window_index = vec->window_index;
        decision.decided_at_us = p.ts_us;
        shard.routes[key] = CachedDecision{pred.label};
        if (cfg_.keep_decision_log) shard.log.push_back(decision);

        if (shard.feature_queue.size() < cfg_.feature_queue_capacity)
            shard.feature_queue.push_back(FeatureEntry{*vec, pred.label, model->version});
        else
            ++shard.counters.feature_entries_dropped;

        res.decision = decision;
    }

    const auto route = shard.routes.find(key);
    if (route == shard.routes.end()) {
        res.sink = SinkId::OTHER_SERVER;
        res.pre_decision = true;
        ++shard.counters.pre_decision_packets;
    } else {
        res.sink = sink_for(route->second.label);
        res.pre_decision = false;
    }
    ++shard.counters.delivered[static_cast<std::size_t>(res.sink)];
    return res;
}

ClassifierPipeline::RouteResult ClassifierPipeline::classify_and_route(const Packet& p) {
    return process(p.proto == 17 ? shard_of(flow_key(p)) : 0, p);
}

std::uint32_t ClassifierPipeline::swap_model(std::span<const std::uint8_t> envelope) {
    DeserializedModel incoming = deserialize_model(envelope);
    std::lock_guard lock(swap_mu_);
    const auto current = handle();
    if (incoming.version <= current->version)
        throw StaleVersion("swap: version " + std::to_string(incoming.version) +
                           " not newer than " + std::to_string(current->version));
    auto next = std::make_shared<ModelHandle>();
    next->model = std::move(incoming.model);
    next->version = incoming.version;
    std::atomic_store(&model_, std::shared_ptr<const ModelHandle>(std::move(next)));
    return incoming.version;
}

std::uint32_t ClassifierPipeline::current_version() const { return handle()->version; }

std::vector<ClassifierPipeline::FeatureEntry> ClassifierPipeline::drain_features(
    std::size_t shard_idx) {
    Shard& shard = *shards_[shard_idx];
    std::vector<FeatureEntry> out(shard.feature_queue.begin(), shard.feature_queue.end());
    shard.feature_queue.clear();
    return out;
}

std::vector<FlowKey> ClassifierPipeline::flush_expired(std::size_t shard_idx, std::int64_t now_us,
                                                       std::int64_t idle_timeout_us) {
    Shard& shard = *shards_[shard_idx];
    auto evicted = shard.extractor.flush_expired(now_us, idle_timeout_us);
    for (const FlowKey& key : evicted) shard.routes.erase(key);
    return evicted;
}

ClassifierPipeline::Counters ClassifierPipeline::counters() const {
    Counters total;
    for (const auto& shard : shards_) {
        const Counters& c = shard->counters;
        total.packets_in += c.packets_in;
        for (int i = 0; i < 3; ++i) total.delivered[i] += c.delivered[i];
        total.drops += c.drops;
        total.pre_decision_packets += c.pre_decision_packets;
        total.windows_classified += c.windows_classified;
        total.feature_entries_dropped += c.feature_entries_dropped;
    }
    return total;
}

std::vector<RouteDecision> ClassifierPipeline::decision_log() const {
    std::vector<RouteDecision> all;
    for (const auto& shard : shards_) all.insert(all.end(), shard->log.begin(), shard->log.end());
    std::stable_sort(all.begin(), all.end(), [](const RouteDecision& a, const RouteDecision& b) {
        if (a.decided_at_us != b.decided_at_us) return a.decided_at_us < b.decided_at_us;
        if (!(a.flow == b.flow)) return a.flow < b.flow;
        return a.window_index < b.window_index;
    });
    return all;
}

std::string write_decision_csv(const std::vector<RouteDecision>& decisions) {
    std::ostringstream out;
    out << "src_ip,src_port,dst_ip,dst_port,proto,window_index,label,confidence,"
           "model_version,decided_at_us\n";
    char buf[32];
    for (const RouteDecision& d : decisions) {
        std::snprintf(buf, sizeof(buf), "%.9g", d.confidence);
        out << ipv4_to_string(d.flow.src_ip) << ',' << d.flow.src_port << ','
            << ipv4_to_string(d.flow.dst_ip) << ',' << d.flow.dst_port << ','
            << static_cast<unsigned>(d.flow.proto) << ',' << d.window_index << ','
            << label_name(d.label) << ',' << buf << ',' << d.model_version << ','
            << d.decided_at_us << '\n';
    }
    return out.str();
}

}  // namespace posmac
