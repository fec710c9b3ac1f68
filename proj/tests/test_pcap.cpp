#include <doctest.h>

#include <vector>

#include "posmac/errors.hpp"
#include "posmac/pcap.hpp"
#include "posmac/rng.hpp"

using namespace posmac;

namespace {

// test-side byte builders, independent of the implementation's encoders
void le32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(x & 0xFF);
    v.push_back((x >> 8) & 0xFF);
    v.push_back((x >> 16) & 0xFF);
    v.push_back((x >> 24) & 0xFF);
}
void le16(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(x & 0xFF);
    v.push_back(x >> 8);
}
void be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back((x >> 24) & 0xFF);
    v.push_back((x >> 16) & 0xFF);
    v.push_back((x >> 8) & 0xFF);
    v.push_back(x & 0xFF);
}
void be16(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(x >> 8);
    v.push_back(x & 0xFF);
}

std::vector<std::uint8_t> global_header() {
    std::vector<std::uint8_t> v;
    le32(v, 0xA1B2C3D4);
    le16(v, 2);
    le16(v, 4);
    le32(v, 0);
    le32(v, 0);
    le32(v, 65535);
    le32(v, 1);  // Ethernet
    return v;
}

// one 60-byte UDP-in-IPv4-in-Ethernet frame: 14 + 20 + 8 + 18 payload
std::vector<std::uint8_t> udp_frame(std::uint32_t src_ip, std::uint16_t src_port,
                                    std::uint32_t dst_ip, std::uint16_t dst_port,
                                    const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> v;
    for (int i = 0; i < 6; ++i) v.push_back(0xAA);  // dst mac
    for (int i = 0; i < 6; ++i) v.push_back(0xBB);  // src mac
    be16(v, 0x0800);
    v.push_back(0x45);
    v.push_back(0);
    be16(v, static_cast<std::uint16_t>(20 + 8 + payload.size()));
    be16(v, 0x1234);  // id
    be16(v, 0);
    v.push_back(64);
    v.push_back(17);
    be16(v, 0);  // checksum (reader does not verify)
    be32(v, src_ip);
    be32(v, dst_ip);
    be16(v, src_port);
    be16(v, dst_port);
    be16(v, static_cast<std::uint16_t>(8 + payload.size()));
    be16(v, 0);
    v.insert(v.end(), payload.begin(), payload.end());
    return v;
}

std::vector<std::uint8_t> one_record_file() {
    auto v = global_header();
    const std::vector<std::uint8_t> payload = {0, 1, 2,  3,  4,  5,  6,  7,  8,
                                               9, 10, 11, 12, 13, 14, 15, 16, 17};
    const auto frame =
        udp_frame(0x0A000001, 5004, 0x0A00010A, 4000, payload);  // 10.0.0.1 -> 10.0.1.10
    REQUIRE(frame.size() == 60);
    le32(v, 1700000000);  // ts_sec
    le32(v, 123456);      // ts_usec
    le32(v, 60);          // incl_len
    le32(v, 60);          // orig_len
    v.insert(v.end(), frame.begin(), frame.end());
    return v;
}

// big-endian variant: byte-swap the global and record headers, leave frame bytes
std::vector<std::uint8_t> byte_swapped(const std::vector<std::uint8_t>& native) {
    std::vector<std::uint8_t> v = native;
    auto swap32 = [&](std::size_t off) { std::swap(v[off], v[off + 3]); std::swap(v[off + 1], v[off + 2]); };
    auto swap16 = [&](std::size_t off) { std::swap(v[off], v[off + 1]); };
    swap32(0);
    swap16(4);
    swap16(6);
    swap32(8);
    swap32(12);
    swap32(16);
    swap32(20);
    for (std::size_t off = 24; off < v.size();) {
        swap32(off);
        swap32(off + 4);
        swap32(off + 8);
        swap32(off + 12);
        const std::uint32_t incl = static_cast<std::uint32_t>(v[off + 8]) |
                                   (static_cast<std::uint32_t>(v[off + 9]) << 8) |
                                   (static_cast<std::uint32_t>(v[off + 10]) << 16) |
                                   (static_cast<std::uint32_t>(v[off + 11]) << 24);
        // after swapping, incl_len is big-endian on the wire; recover it
        const std::uint32_t incl_be = ((incl & 0xFF) << 24) | ((incl & 0xFF00) << 8) |
                                      ((incl >> 8) & 0xFF00) | (incl >> 24);
        off += 16 + incl_be;
    }
    return v;
}

Packet random_packet(SplitMix64& rng) {
    Packet p;
    p.ts_us = static_cast<std::int64_t>(rng.below(4000000000000ull));
    p.src_ip = static_cast<Ipv4>(rng.next());
    p.dst_ip = static_cast<Ipv4>(rng.next());
    p.src_port = static_cast<std::uint16_t>(rng.below(65536));
    p.dst_port = static_cast<std::uint16_t>(rng.below(65536));
    p.proto = 17;
    p.payload.resize(rng.below(300));
    for (auto& b : p.payload) b = static_cast<std::uint8_t>(rng.next());
    p.wire_len = static_cast<std::uint32_t>(42 + p.payload.size() + rng.below(8));
    return p;
}

}  // namespace

TEST_SUITE("pcap") {

TEST_CASE("hand-built single-record file decodes field by field") {
    const auto file = one_record_file();
    const auto res = read_pcap(file);
    CHECK(res.link_type == 1);
    CHECK(res.skipped_records == 0);
    REQUIRE(res.packets.size() == 1);
    const Packet& p = res.packets[0];
    CHECK(p.ts_us == 1700000000LL * 1000000 + 123456);
    CHECK(ipv4_to_string(p.src_ip) == "10.0.0.1");
    CHECK(p.src_port == 5004);
    CHECK(ipv4_to_string(p.dst_ip) == "10.0.1.10");
    CHECK(p.dst_port == 4000);
    CHECK(p.proto == 17);
    CHECK(p.wire_len == 60);
    REQUIRE(p.payload.size() == 18);
    for (std::size_t i = 0; i < 18; ++i) CHECK(p.payload[i] == i);
}

TEST_CASE("byte-swapped file yields the identical packet") {
    const auto native = one_record_file();
    const auto swapped = byte_swapped(native);
    REQUIRE(swapped != native);
    const auto a = read_pcap(native);
    const auto b = read_pcap(swapped);
    REQUIRE(b.packets.size() == 1);
    CHECK(a.packets[0] == b.packets[0]);
    CHECK(b.link_type == 1);
}

TEST_CASE("error gates: magic, truncation, link type") {
    auto file = one_record_file();

    SUBCASE("bad magic") {
        file[0] = 'X';
        CHECK_THROWS_AS(read_pcap(file), BadMagic);
    }
    SUBCASE("file cut before record end") {
        file.resize(file.size() - 3);
        CHECK_THROWS_AS(read_pcap(file), TruncatedRecord);
    }
    SUBCASE("file cut inside the record header") {
        file.resize(24 + 7);
        CHECK_THROWS_AS(read_pcap(file), TruncatedRecord);
    }
    SUBCASE("non-Ethernet link type") {
        file[20] = 101;  // raw IP
        CHECK_THROWS_AS(read_pcap(file), UnsupportedLinkType);
    }
    SUBCASE("shorter than a global header") {
        file.resize(10);
        CHECK_THROWS_AS(read_pcap(file), BadMagic);
    }
}

TEST_CASE("non-UDP records are skipped and counted") {
    auto v = global_header();
    // TCP frame: same shape, proto 6
    std::vector<std::uint8_t> payload(18, 0);
    auto frame = udp_frame(0x0A000001, 1, 0x0A000002, 2, payload);
    frame[23] = 6;
    le32(v, 0);
    le32(v, 0);
    le32(v, static_cast<std::uint32_t>(frame.size()));
    le32(v, static_cast<std::uint32_t>(frame.size()));
    v.insert(v.end(), frame.begin(), frame.end());
    // IPv6 ethertype
    auto frame6 = udp_frame(0x0A000001, 1, 0x0A000002, 2, payload);
    frame6[12] = 0x86;
    frame6[13] = 0xDD;
    le32(v, 0);
    le32(v, 1);
    le32(v, static_cast<std::uint32_t>(frame6.size()));
    le32(v, static_cast<std::uint32_t>(frame6.size()));
    v.insert(v.end(), frame6.begin(), frame6.end());

    const auto res = read_pcap(v);
    CHECK(res.packets.empty());
    CHECK(res.skipped_records == 2);
}

TEST_CASE("write_pcap of an empty list is just the global header") {
    const auto bytes = write_pcap(kLinkTypeEthernet, {});
    CHECK(bytes.size() == 24);
    CHECK(read_pcap(bytes).packets.empty());
}

TEST_CASE("single packet round-trips") {
    SplitMix64 rng(3);
    const Packet p = random_packet(rng);
    const auto bytes = write_pcap(kLinkTypeEthernet, {p});
    const auto res = read_pcap(bytes);
    REQUIRE(res.packets.size() == 1);
    CHECK(res.packets[0] == p);
}

TEST_CASE("random packet lists round-trip bit-for-bit") {
    SplitMix64 rng(1234);
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<Packet> packets(rng.below(40));
        for (auto& p : packets) p = random_packet(rng);

        const auto bytes = write_pcap(kLinkTypeEthernet, packets);
        const auto back = read_pcap(bytes);
        REQUIRE(back.packets.size() == packets.size());
        for (std::size_t i = 0; i < packets.size(); ++i) CHECK(back.packets[i] == packets[i]);

        // canonical bytes: write(read(write(x))) == write(x)
        const auto again = write_pcap(kLinkTypeEthernet, back.packets);
        CHECK(again == bytes);
    }
}

TEST_CASE("sidecar csv round trip") {
    GroundTruth truth;
    FlowKey k1{*ipv4_from_string("10.0.0.1"), 5004, *ipv4_from_string("10.100.0.10"), 4000, 17};
    FlowKey k2{*ipv4_from_string("10.1.0.1"), 5004, *ipv4_from_string("10.100.1.10"), 4001, 17};
    truth.add(k1, ClassLabel::AR);
    truth.add(k2, ClassLabel::CG);

    const std::string csv = write_sidecar_csv(truth);
    CHECK(csv.find("src_ip,src_port,dst_ip,dst_port,proto,label\n") == 0);
    CHECK(csv.find("10.0.0.1,5004,10.100.0.10,4000,17,AR\n") != std::string::npos);

    const GroundTruth back = read_sidecar_csv(csv);
    REQUIRE(back.size() == 2);
    CHECK(back.lookup(k1) == ClassLabel::AR);
    CHECK(back.lookup(k2) == ClassLabel::CG);
    CHECK_FALSE(back.lookup(FlowKey{1, 2, 3, 4, 17}).has_value());
}

TEST_CASE("duplicate sidecar rows are rejected") {
    GroundTruth truth;
    FlowKey k{1, 2, 3, 4, 17};
    truth.add(k, ClassLabel::AR);
    CHECK_THROWS_AS(truth.add(k, ClassLabel::CG), Error);
}

}  // TEST_SUITE
