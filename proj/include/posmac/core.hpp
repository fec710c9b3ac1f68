#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace posmac {

// IPv4 address, host byte order.
using Ipv4 = std::uint32_t;

std::string ipv4_to_string(Ipv4 addr);
std::optional<Ipv4> ipv4_from_string(std::string_view s);

// One timestamped UDP datagram as seen by the classifier. payload is the
// UDP payload only; wire_len is the original frame length on the wire.
struct Packet {
    std::int64_t ts_us = 0;
    Ipv4 src_ip = 0;
    Ipv4 dst_ip = 0;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint8_t proto = 17;
    std::vector<std::uint8_t> payload;
    std::uint32_t wire_len = 0;

    friend bool operator==(const Packet&, const Packet&) = default;
};

// Direction-sensitive 5-tuple flow identity (A->B != B->A).
struct FlowKey {
    Ipv4 src_ip = 0;
    std::uint16_t src_port = 0;
    Ipv4 dst_ip = 0;
    std::uint16_t dst_port = 0;
    std::uint8_t proto = 0;

    friend bool operator==(const FlowKey&, const FlowKey&) = default;
    friend bool operator<(const FlowKey& a, const FlowKey& b) {
        return std::tie(a.src_ip, a.src_port, a.dst_ip, a.dst_port, a.proto) <
               std::tie(b.src_ip, b.src_port, b.dst_ip, b.dst_port, b.proto);
    }
};

// Deterministic across runs and hosts (no per-process hash salt), so flow
// sharding is reproducible.
struct FlowKeyHash {
    std::size_t operator()(const FlowKey& k) const noexcept;
};

enum class ClassLabel : std::uint8_t { AR = 0, CG = 1, Other = 2 };
inline constexpr int kNumClasses = 3;

// Stable wire/CSV names: "AR", "CG", "other".
const char* label_name(ClassLabel l);
std::optional<ClassLabel> label_from_name(std::string_view s);
std::optional<ClassLabel> label_from_code(std::uint8_t code);
inline std::uint8_t label_code(ClassLabel l) { return static_cast<std::uint8_t>(l); }

// First 12 bytes of an RTP packet. CSRC lists and header extensions are not
// parsed; version 2 and length are the only gates.
struct RtpHeader {
    std::uint8_t version = 0;
    bool padding = false;
    bool marker = false;
    std::uint8_t payload_type = 0;
    std::uint16_t seq = 0;
    std::uint32_t timestamp = 0;
    std::uint32_t ssrc = 0;

    friend bool operator==(const RtpHeader&, const RtpHeader&) = default;
};

inline constexpr std::size_t kRtpHeaderLen = 12;

FlowKey flow_key(const Packet& p);

// nullopt = NotRtp (payload shorter than 12 bytes or version != 2); the
// caller falls back to packet-as-frame accounting.
std::optional<RtpHeader> parse_rtp(std::span<const std::uint8_t> payload);

// Encodes the 12-byte header (multi-byte fields big-endian). Used by the
// traffic synthesizer and tests; inverse of parse_rtp for cc=0 headers.
void encode_rtp(const RtpHeader& h, std::uint8_t out[kRtpHeaderLen]);

}  // namespace posmac
