#include "posmac/label_oracle.hpp"

#include <algorithm>
#include <sstream>

namespace posmac {

LabelOracle::LabelOracle(GroundTruth truth, Config cfg) : truth_(std::move(truth)), cfg_(cfg) {}

LabelOracle::Outcome LabelOracle::verify_and_label(const Packet& p, SinkId sink,
                                                   bool pre_decision) {
    Outcome out;
    ++counters_.delivered;

    const FlowKey key = flow_key(p);
    const auto truth_label = truth_.lookup(key);
    if (!truth_label) {
        ++counters_.unknown_flow;
        return out;
    }

    // label emission on first sighting at any sink (or per re-emission epoch)
    const auto last = last_emitted_.find(key);
    const bool due = last == last_emitted_.end() ||
                     (cfg_.reemit_interval_us > 0 &&
                      p.ts_us - last->second >= cfg_.reemit_interval_us);
    if (due) {
        LabelEmission e;
        e.flow = key;
        e.label = *truth_label;
        e.emitted_at_us = p.ts_us + cfg_.latency_us;
        last_emitted_[key] = p.ts_us;
        pending_.push_back(e);
        out.emission = e;
    }

    if (pre_decision) {
        ++counters_.pre_decision;
        return out;
    }
    if (sink == sink_for(*truth_label)) {
        ++counters_.correctly_routed;
        return out;
    }

    ++counters_.misrouted;
    auto [it, inserted] = misroutes_.try_emplace(key);
    MisrouteRecord& rec = it->second;
    if (inserted) {
        rec.flow = key;
        rec.expected = *truth_label;
        rec.routed_to = sink;  // sink of the first misrouted packet
        rec.first_seen_us = p.ts_us;
    }
    ++rec.packet_count;
    out.misroute = rec;
    return out;
}

std::vector<LabelEmission> LabelOracle::drain_due(std::int64_t now_us) {
    std::vector<LabelEmission> due;
    while (!pending_.empty() && pending_.front().emitted_at_us <= now_us) {
        due.push_back(pending_.front());
        pending_.pop_front();
    }
    return due;
}

std::vector<MisrouteRecord> LabelOracle::misroutes() const {
    std::vector<MisrouteRecord> out;
    out.reserve(misroutes_.size());
    for (const auto& [key, rec] : misroutes_) out.push_back(rec);
    std::sort(out.begin(), out.end(),
              [](const MisrouteRecord& a, const MisrouteRecord& b) { return a.flow < b.flow; });
    return out;
}

std::string write_misroute_csv(const std::vector<MisrouteRecord>& records) {
    std::ostringstream out;
    out << "src_ip,src_port,dst_ip,dst_port,proto,expected,routed_to,first_seen_us,packet_count\n";
    for (const MisrouteRecord& r : records) {
        out << ipv4_to_string(r.flow.src_ip) << ',' << r.flow.src_port << ','
            << ipv4_to_string(r.flow.dst_ip) << ',' << r.flow.dst_port << ','
            << static_cast<unsigned>(r.flow.proto) << ',' << label_name(r.expected) << ','
            << sink_name(r.routed_to) << ',' << r.first_seen_us << ',' << r.packet_count << '\n';
    }
    return out.str();
}

}  // namespace posmac
