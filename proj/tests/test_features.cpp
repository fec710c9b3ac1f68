#include <doctest.h>

#include <cmath>

#include "posmac/core.hpp"
#include "posmac/features.hpp"
#include "posmac/rng.hpp"
#include "posmac/synth.hpp"

using namespace posmac;

namespace {

Packet udp_packet(std::int64_t ts_us, std::size_t payload_len, std::uint16_t src_port = 5004) {
    Packet p;
    p.ts_us = ts_us;
    p.src_ip = 0x0A000001;
    p.dst_ip = 0x0A000002;
    p.src_port = src_port;
    p.dst_port = 4000;
    p.proto = 17;
    p.payload.assign(payload_len, 0x41);  // 'A' first byte: never RTP version 2
    p.wire_len = static_cast<std::uint32_t>(42 + payload_len);
    return p;
}

Packet rtp_packet(std::int64_t ts_us, std::size_t payload_len, std::uint32_t rtp_ts, bool marker,
                  std::uint16_t seq) {
    Packet p = udp_packet(ts_us, std::max<std::size_t>(payload_len, kRtpHeaderLen));
    RtpHeader h;
    h.version = 2;
    h.marker = marker;
    h.payload_type = 96;
    h.seq = seq;
    h.timestamp = rtp_ts;
    h.ssrc = 0xABCD;
    encode_rtp(h, p.payload.data());
    return p;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("worked example: W=4 non-RTP window") {
    FeatureExtractor ext({4});
    CHECK_FALSE(ext.observe(udp_packet(0, 100)).has_value());
    CHECK_FALSE(ext.observe(udp_packet(1000, 200)).has_value());
    CHECK_FALSE(ext.observe(udp_packet(2000, 100)).has_value());
    const auto v = ext.observe(udp_packet(3000, 200));
    REQUIRE(v.has_value());
    CHECK(v->window_index == 0);
    CHECK(v->f[0] == doctest::Approx(150.0));   // mean_ps
    CHECK(v->f[1] == doctest::Approx(50.0));    // std_ps (population)
    CHECK(v->f[2] == doctest::Approx(1000.0));  // mean_ipi
    CHECK(v->f[3] == doctest::Approx(0.0));     // std_ipi
    CHECK(v->f[4] == doctest::Approx(150.0));   // mean_fs == mean_ps (fallback)
    CHECK(v->f[5] == doctest::Approx(50.0));
    CHECK(v->f[6] == doctest::Approx(1000.0));
    CHECK(v->f[7] == doctest::Approx(0.0));
}

TEST_CASE("three packets in a W=4 window emit nothing") {
    FeatureExtractor ext({4});
    CHECK_FALSE(ext.observe(udp_packet(0, 100)).has_value());
    CHECK_FALSE(ext.observe(udp_packet(1, 100)).has_value());
    CHECK_FALSE(ext.observe(udp_packet(2, 100)).has_value());
}

TEST_CASE("rtp frame: two packets sharing a timestamp, marker closes at 800 bytes") {
    FeatureExtractor ext({2});
    CHECK_FALSE(ext.observe(rtp_packet(0, 500, 1000, false, 1)).has_value());
    const auto v = ext.observe(rtp_packet(200, 300, 1000, true, 2));
    REQUIRE(v.has_value());
    CHECK(v->f[4] == doctest::Approx(800.0));  // one completed frame of 800 B
    CHECK(v->f[5] == doctest::Approx(0.0));
}

TEST_CASE("rtp frames close on timestamp change without marker") {
    FeatureExtractor ext({4});
    ext.observe(rtp_packet(0, 500, 1000, false, 1));
    ext.observe(rtp_packet(100, 300, 1000, false, 2));
    ext.observe(rtp_packet(200, 400, 2000, false, 3));  // new group: closes 800-frame
    const auto v = ext.observe(rtp_packet(300, 100, 3000, false, 4));
    REQUIRE(v.has_value());
    // completed frames in window: 800 (closed by ts change at 200) and 400
    // (closed at 300); the 100-byte group is still open
    CHECK(v->f[4] == doctest::Approx(600.0));
    CHECK(v->f[5] == doctest::Approx(200.0));
    // one ifi sample: frame-B start 200 minus frame-A start 0
    CHECK(v->f[6] == doctest::Approx(200.0));
    CHECK(v->f[7] == doctest::Approx(0.0));
}

TEST_CASE("window accounting: k*W packets emit exactly k vectors in order") {
    FeatureExtractor ext({5});
    std::vector<std::uint64_t> indices;
    for (int i = 0; i < 23; ++i) {
        if (const auto v = ext.observe(udp_packet(i * 100, 100))) indices.push_back(v->window_index);
    }
    CHECK(indices == std::vector<std::uint64_t>{0, 1, 2, 3});
}

TEST_CASE("ipi spans window boundaries; stds of constant streams are zero") {
    FeatureExtractor ext({2});
    ext.observe(udp_packet(0, 100));
    const auto v0 = ext.observe(udp_packet(1000, 100));
    REQUIRE(v0.has_value());
    CHECK(v0->f[2] == doctest::Approx(1000.0));  // one ipi sample
    ext.observe(udp_packet(2000, 100));
    const auto v1 = ext.observe(udp_packet(3000, 100));
    REQUIRE(v1.has_value());
    // window 1 sees ipi 1000 (boundary) and 1000
    CHECK(v1->f[2] == doctest::Approx(1000.0));
    CHECK(v1->f[3] == doctest::Approx(0.0));
    CHECK(v1->f[1] == doctest::Approx(0.0));  // constant ps
}

TEST_CASE("first window of a flow has zero-imputed ipi when W=1") {
    FeatureExtractor ext({1});
    const auto v = ext.observe(udp_packet(0, 100));
    REQUIRE(v.has_value());
    CHECK(v->f[2] == 0.0);  // no ipi sample yet: imputed 0
    CHECK(v->f[3] == 0.0);
    CHECK(v->f[0] == doctest::Approx(100.0));
}

TEST_CASE("flows are independent") {
    FeatureExtractor ext({2});
    ext.observe(udp_packet(0, 100, 1111));
    ext.observe(udp_packet(50, 900, 2222));
    const auto v1 = ext.observe(udp_packet(1000, 100, 1111));
    REQUIRE(v1.has_value());
    CHECK(v1->f[0] == doctest::Approx(100.0));
    const auto v2 = ext.observe(udp_packet(1050, 900, 2222));
    REQUIRE(v2.has_value());
    CHECK(v2->f[0] == doctest::Approx(900.0));
}

TEST_CASE("flush_expired evicts idle flows and resets window indices") {
    FeatureExtractor ext({2});
    ext.observe(udp_packet(0, 100));
    ext.observe(udp_packet(1000, 100));  // emits window 0
    CHECK(ext.active_flows() == 1);

    SUBCASE("idle 31 s with 30 s timeout: evicted, next window restarts at 0") {
        const auto evicted = ext.flush_expired(1000 + 31'000'000, 30'000'000);
        REQUIRE(evicted.size() == 1);
        CHECK(evicted[0] == flow_key(udp_packet(0, 100)));
        CHECK(ext.active_flows() == 0);
        ext.observe(udp_packet(40'000'000, 100));
        const auto v = ext.observe(udp_packet(40'001'000, 100));
        REQUIRE(v.has_value());
        CHECK(v->window_index == 0);
    }
    SUBCASE("idle 29 s with 30 s timeout: retained") {
        CHECK(ext.flush_expired(1000 + 29'000'000, 30'000'000).empty());
        CHECK(ext.active_flows() == 1);
        ext.observe(udp_packet(40'000'000, 100));
        const auto v = ext.observe(udp_packet(40'001'000, 100));
        REQUIRE(v.has_value());
        CHECK(v->window_index == 1);  // continues the flow
    }
    SUBCASE("no flows: empty list") {
        FeatureExtractor empty({2});
        CHECK(empty.flush_expired(100, 1).empty());
    }
}

TEST_CASE("partial windows are discarded on eviction, never emitted") {
    FeatureExtractor ext({4});
    ext.observe(udp_packet(0, 100));
    ext.observe(udp_packet(10, 100));
    ext.flush_expired(100'000'000, 30'000'000);
    // three more packets of the same 5-tuple: still no emission (fresh state)
    CHECK_FALSE(ext.observe(udp_packet(200'000'000, 100)).has_value());
    CHECK_FALSE(ext.observe(udp_packet(200'000'100, 100)).has_value());
    CHECK_FALSE(ext.observe(udp_packet(200'000'200, 100)).has_value());
    CHECK(ext.observe(udp_packet(200'000'300, 100)).has_value());
}

TEST_CASE("determinism: same packet stream, same vector stream") {
    const auto traffic = synth_mixed(
        std::vector<TrafficProfile>{default_profile(ClassLabel::AR),
                                    default_profile(ClassLabel::CG)},
        3, 2.0, 77);

    auto run_once = [&] {
        FeatureExtractor ext({10});
        std::vector<FeatureVector> out;
        for (const Packet& p : traffic.packets)
            if (auto v = ext.observe(p)) out.push_back(*v);
        return out;
    };
    const auto a = run_once();
    const auto b = run_once();
    REQUIRE(!a.empty());
    CHECK(a == b);
}

TEST_CASE("fallback equivalence: non-RTP flows mirror ps/ipi into fs/ifi") {
    SplitMix64 rng(42);
    FeatureExtractor ext({8});
    std::int64_t ts = 0;
    for (int i = 0; i < 200; ++i) {
        ts += static_cast<std::int64_t>(rng.below(5000) + 1);
        const auto v = ext.observe(udp_packet(ts, 40 + rng.below(1000)));
        if (v) {
            CHECK(v->f[4] == doctest::Approx(v->f[0]));
            CHECK(v->f[5] == doctest::Approx(v->f[1]));
            CHECK(v->f[6] == doctest::Approx(v->f[2]));
            CHECK(v->f[7] == doctest::Approx(v->f[3]));
        }
    }
}

TEST_CASE("labeled csv round trip") {
    FeatureExtractor ext({2});
    ext.observe(udp_packet(0, 100));
    const auto v = ext.observe(udp_packet(1000, 200));
    REQUIRE(v.has_value());

    const std::vector<LabeledWindow> rows = {{*v, ClassLabel::CG}};
    const std::string csv = write_labeled_csv(rows);
    const auto back = read_labeled_csv(csv);
    REQUIRE(back.size() == 1);
    CHECK(back[0].vec == rows[0].vec);
    CHECK(back[0].label == ClassLabel::CG);
}

}  // TEST_SUITE
