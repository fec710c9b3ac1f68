#include <doctest.h>

#include "posmac/errors.hpp"
#include "posmac/replay.hpp"
#include "posmac/rng.hpp"

using namespace posmac;

namespace {

Packet at(std::int64_t ts_us) {
    Packet p;
    p.ts_us = ts_us;
    p.proto = 17;
    return p;
}

}  // namespace

TEST_SUITE("replay") {

TEST_CASE("speed 0 delivers everything in order, fast") {
    std::vector<Packet> packets;
    packets.reserve(100000);
    for (int i = 0; i < 100000; ++i) packets.push_back(at(i * 10));

    std::int64_t last = -1;
    std::uint64_t n = 0;
    const auto stats = replay(packets, 0.0, [&](const Packet& p) {
        CHECK(p.ts_us >= last);
        last = p.ts_us;
        ++n;
    });
    CHECK(n == packets.size());
    CHECK(stats.packets_sent == packets.size());
}

TEST_CASE("pacing lower bound at speed 1") {
    const std::vector<Packet> packets = {at(0), at(1000000)};
    const auto stats = replay(packets, 1.0, [](const Packet&) {});
    CHECK(stats.packets_sent == 2);
    CHECK(stats.elapsed_s >= 1.0);
}

TEST_CASE("speed 10 compresses a 1 s gap to about 0.1 s") {
    // slack covers scheduler latency; generous on purpose
    constexpr double kSchedulingSlackS = 0.25;
    const std::vector<Packet> packets = {at(0), at(1000000)};
    const auto stats = replay(packets, 10.0, [](const Packet&) {});
    CHECK(stats.elapsed_s >= 0.1);
    CHECK(stats.elapsed_s <= 0.1 + kSchedulingSlackS);
}

TEST_CASE("unsorted input is rejected") {
    const std::vector<Packet> packets = {at(5), at(3)};
    CHECK_THROWS_AS(replay(packets, 0.0, [](const Packet&) {}), UnsortedInput);
}

TEST_CASE("empty input completes with zero packets") {
    const auto stats = replay({}, 1.0, [](const Packet&) {});
    CHECK(stats.packets_sent == 0);
}

}  // TEST_SUITE
