#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "posmac/core.hpp"
#include "posmac/pcap.hpp"

namespace posmac {

// Knobs for one synthetic application class: frames arrive at Gaussian-
// jittered intervals, each frame of Gaussian size is packetized at the mtu
// with Gaussian intra-frame spacing.
struct TrafficProfile {
    ClassLabel label = ClassLabel::Other;
    double frame_rate_hz = 30.0;
    double frame_interval_jitter_us = 0.0;  // std dev
    double frame_size_mean_bytes = 8000.0;
    double frame_size_std_bytes = 0.0;
    std::uint32_t mtu_payload_bytes = 1200;
    double intra_frame_ipi_mean_us = 200.0;
    double intra_frame_ipi_std_us = 0.0;
    bool rtp = true;
};

// Harness defaults per class (invented fixture values, configurable).
TrafficProfile default_profile(ClassLabel label);

struct SynthResult {
    std::vector<Packet> packets;  // merged in global timestamp order
    GroundTruth truth;
};

// Deterministic in (profile, flows, duration_s, seed): per-flow streams are
// seeded from (seed, flow_index + flow_index_offset). flow_index_offset
// keeps 5-tuples distinct when several batches of the same class are merged.
SynthResult synth_traffic(const TrafficProfile& profile, std::size_t flows, double duration_s,
                          std::uint64_t seed, std::size_t flow_index_offset = 0);

// One call per profile with sub-seeds derived from (seed, profile index);
// packets merged in timestamp order, sidecars concatenated.
SynthResult synth_mixed(std::span<const TrafficProfile> profiles, std::size_t flows_per_profile,
                        double duration_s, std::uint64_t seed, std::size_t flow_index_offset = 0);

}  // namespace posmac
