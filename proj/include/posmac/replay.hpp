#pragma once

#include <functional>
#include <vector>

#include "posmac/core.hpp"

namespace posmac {

struct ReplayStats {
    std::uint64_t packets_sent = 0;
    double elapsed_s = 0.0;
    double achieved_pps = 0.0;
};

using PacketSink = std::function<void(const Packet&)>;

// Paces packets on a dedicated worker: with speed_factor s > 0 delivery
// spacing approximates (delta ts)/s; s == 0 means as fast as possible.
// Packets are handed to the sink through an ordered bounded queue; the sink
// runs on the caller's thread. Throws UnsortedInput if ts_us is not
// non-decreasing.
ReplayStats replay(const std::vector<Packet>& packets, double speed_factor,
                   const PacketSink& sink);

}  // namespace posmac
