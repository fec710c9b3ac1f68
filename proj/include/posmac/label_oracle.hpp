#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

#include "posmac/core.hpp"
#include "posmac/pcap.hpp"
#include "posmac/pipeline.hpp"

namespace posmac {

struct MisrouteRecord {
    FlowKey flow;
    ClassLabel expected = ClassLabel::Other;
    SinkId routed_to = SinkId::OTHER_SERVER;
    std::int64_t first_seen_us = 0;
    std::uint64_t packet_count = 0;
};

struct LabelEmission {
    FlowKey flow;
    ClassLabel label = ClassLabel::Other;
    std::int64_t emitted_at_us = 0;  // release time (arrival + latency)
};

// The three application servers folded into one oracle: looks routed packets
// up in the ground truth, emits each flow's true label toward the trainer,
// and records misroutes. Emissions are released after a configurable latency
// via drain_due.
class LabelOracle {
public:
    struct Config {
        std::int64_t latency_us = 0;
        std::int64_t reemit_interval_us = 0;  // 0 = once per flow per run
    };

    struct Counters {
        std::uint64_t delivered = 0;
        std::uint64_t correctly_routed = 0;
        std::uint64_t misrouted = 0;
        std::uint64_t pre_decision = 0;
        std::uint64_t unknown_flow = 0;
    };

    struct Outcome {
        std::optional<MisrouteRecord> misroute;  // snapshot after this packet
        std::optional<LabelEmission> emission;   // created by this packet
    };

    explicit LabelOracle(GroundTruth truth, Config cfg = {});

    Outcome verify_and_label(const Packet& p, SinkId sink, bool pre_decision);

    // Emissions whose release time has passed, in emission order.
    std::vector<LabelEmission> drain_due(std::int64_t now_us);

    const Counters& counters() const { return counters_; }
    std::vector<MisrouteRecord> misroutes() const;  // sorted by flow
    const GroundTruth& truth() const { return truth_; }

private:
    GroundTruth truth_;
    Config cfg_;
    Counters counters_;
    // Packet categories are disjoint with precedence unknown > pre-decision >
    // correct/misroute, so the counters sum exactly to delivered.
    std::unordered_map<FlowKey, std::int64_t, FlowKeyHash> last_emitted_;
    std::unordered_map<FlowKey, MisrouteRecord, FlowKeyHash> misroutes_;
    std::deque<LabelEmission> pending_;
};

std::string write_misroute_csv(const std::vector<MisrouteRecord>& records);

}  // namespace posmac
