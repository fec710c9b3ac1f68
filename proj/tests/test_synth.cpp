#include <doctest.h>

#include <map>
#include <set>

#include "posmac/errors.hpp"
#include "posmac/pcap.hpp"
#include "posmac/synth.hpp"

using namespace posmac;

TEST_SUITE("synth") {

TEST_CASE("zero flows produce nothing") {
    const auto res = synth_traffic(default_profile(ClassLabel::CG), 0, 10.0, 1);
    CHECK(res.packets.empty());
    CHECK(res.truth.size() == 0);
}

TEST_CASE("identical inputs give identical outputs") {
    const auto profile = default_profile(ClassLabel::AR);
    const auto a = synth_traffic(profile, 3, 2.0, 99);
    const auto b = synth_traffic(profile, 3, 2.0, 99);
    REQUIRE(a.packets.size() == b.packets.size());
    CHECK(a.packets == b.packets);
    CHECK(a.truth.rows() == b.truth.rows());

    const auto c = synth_traffic(profile, 3, 2.0, 100);
    CHECK(a.packets != c.packets);
}

TEST_CASE("CG inter-frame intervals average 1/60 s over a long run") {
    // law of large numbers oracle: sample mean within 5% of 16667 us
    auto profile = default_profile(ClassLabel::CG);
    const auto res = synth_traffic(profile, 1, 30.0, 7);

    // frame start = first packet ts of each RTP timestamp group
    std::vector<std::int64_t> frame_starts;
    std::uint32_t last_rtp_ts = 0;
    bool have_last = false;
    for (const Packet& p : res.packets) {
        const auto h = parse_rtp(p.payload);
        REQUIRE(h.has_value());
        if (!have_last || h->timestamp != last_rtp_ts) {
            frame_starts.push_back(p.ts_us);
            last_rtp_ts = h->timestamp;
            have_last = true;
        }
    }
    REQUIRE(frame_starts.size() >= 1000);
    double sum = 0;
    for (std::size_t i = 1; i < frame_starts.size(); ++i)
        sum += static_cast<double>(frame_starts[i] - frame_starts[i - 1]);
    const double mean = sum / static_cast<double>(frame_starts.size() - 1);
    CHECK(mean == doctest::Approx(16667.0).epsilon(0.05));
}

TEST_CASE("packets arrive in timestamp order and cover every sidecar flow") {
    const auto profiles = std::vector<TrafficProfile>{default_profile(ClassLabel::AR),
                                                      default_profile(ClassLabel::CG),
                                                      default_profile(ClassLabel::Other)};
    const auto res = synth_mixed(profiles, 4, 1.0, 5);
    REQUIRE(!res.packets.empty());
    for (std::size_t i = 1; i < res.packets.size(); ++i)
        CHECK(res.packets[i].ts_us >= res.packets[i - 1].ts_us);

    std::set<FlowKey> seen;
    for (const Packet& p : res.packets) seen.insert(flow_key(p));
    CHECK(seen.size() == res.truth.size());
    for (const FlowKey& key : seen) {
        CHECK(res.truth.lookup(key).has_value());
    }
    // and vice versa: every sidecar flow emitted at least one packet
    for (const auto& [key, label] : res.truth.rows()) CHECK(seen.count(key) == 1);
}

TEST_CASE("rtp mode: marker closes each timestamp group") {
    const auto res = synth_traffic(default_profile(ClassLabel::AR), 2, 1.0, 3);
    // per flow, walk the packet sequence: a marker must be the last packet
    // of its timestamp group
    std::map<FlowKey, std::pair<bool, std::uint32_t>> state;  // (marker_seen, current_ts)
    for (const Packet& p : res.packets) {
        const auto h = parse_rtp(p.payload);
        REQUIRE(h.has_value());
        auto& [marker_seen, cur_ts] = state.emplace(flow_key(p), std::make_pair(false, h->timestamp)).first->second;
        if (h->timestamp == cur_ts) {
            // once the marker fired no further packet may share the timestamp
            CHECK_FALSE(marker_seen);
        } else {
            // group changed: previous group must have ended with the marker
            CHECK(marker_seen);
            cur_ts = h->timestamp;
            marker_seen = false;
        }
        if (h->marker) marker_seen = true;
    }
    for (auto& [key, st] : state) CHECK(st.first);  // final group closed
}

TEST_CASE("non-rtp profile payloads never parse as RTP") {
    auto profile = default_profile(ClassLabel::Other);
    profile.rtp = false;
    const auto res = synth_traffic(profile, 2, 1.0, 17);
    REQUIRE(!res.packets.empty());
    for (const Packet& p : res.packets) CHECK_FALSE(parse_rtp(p.payload).has_value());
}

TEST_CASE("invalid profiles are rejected") {
    auto profile = default_profile(ClassLabel::CG);
    SUBCASE("zero frame rate") {
        profile.frame_rate_hz = 0;
        CHECK_THROWS_AS(synth_traffic(profile, 1, 1.0, 1), InvalidProfile);
    }
    SUBCASE("tiny mtu") {
        profile.mtu_payload_bytes = 32;
        CHECK_THROWS_AS(synth_traffic(profile, 1, 1.0, 1), InvalidProfile);
    }
    SUBCASE("negative jitter") {
        profile.frame_interval_jitter_us = -1;
        CHECK_THROWS_AS(synth_traffic(profile, 1, 1.0, 1), InvalidProfile);
    }
}

TEST_CASE("synthesized traffic survives a pcap round trip") {
    const auto res = synth_traffic(default_profile(ClassLabel::CG), 2, 0.5, 21);
    const auto bytes = write_pcap(kLinkTypeEthernet, res.packets);
    const auto back = read_pcap(bytes);
    CHECK(back.packets == res.packets);
}

}  // TEST_SUITE
