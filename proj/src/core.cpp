#include "posmac/core.hpp"

#include <cstdio>

namespace posmac {

std::string ipv4_to_string(Ipv4 addr) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (addr >> 24) & 0xFF, (addr >> 16) & 0xFF,
                  (addr >> 8) & 0xFF, addr & 0xFF);
    return buf;
}

std::optional<Ipv4> ipv4_from_string(std::string_view s) {
    Ipv4 addr = 0;
    std::uint32_t octet = 0;
    int digits = 0;
    int parts = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == '.') {
            if (digits == 0 || octet > 255) return std::nullopt;
            addr = (addr << 8) | octet;
            ++parts;
            octet = 0;
            digits = 0;
        } else if (s[i] >= '0' && s[i] <= '9') {
            octet = octet * 10 + static_cast<std::uint32_t>(s[i] - '0');
            if (++digits > 3) return std::nullopt;
        } else {
            return std::nullopt;
        }
    }
    if (parts != 4) return std::nullopt;
    return addr;
}

std::size_t FlowKeyHash::operator()(const FlowKey& k) const noexcept {
    // SplitMix64 finalizer over the packed tuple
    std::uint64_t x = (static_cast<std::uint64_t>(k.src_ip) << 32) | k.dst_ip;
    std::uint64_t y = (static_cast<std::uint64_t>(k.src_port) << 24) |
                      (static_cast<std::uint64_t>(k.dst_port) << 8) | k.proto;
    std::uint64_t z = x + 0x9E3779B97F4A7C15ull * (y + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return static_cast<std::size_t>(z ^ (z >> 31));
}

const char* label_name(ClassLabel l) {
    switch (l) {
        case ClassLabel::AR: return "AR";
        case ClassLabel::CG: return "CG";
        case ClassLabel::Other: return "other";
    }
    return "other";
}

std::optional<ClassLabel> label_from_name(std::string_view s) {
    if (s == "AR") return ClassLabel::AR;
    if (s == "CG") return ClassLabel::CG;
    if (s == "other") return ClassLabel::Other;
    return std::nullopt;
}

std::optional<ClassLabel> label_from_code(std::uint8_t code) {
    if (code > 2) return std::nullopt;
    return static_cast<ClassLabel>(code);
}

FlowKey flow_key(const Packet& p) {
    return FlowKey{p.src_ip, p.src_port, p.dst_ip, p.dst_port, p.proto};
}

std::optional<RtpHeader> parse_rtp(std::span<const std::uint8_t> payload) {
    if (payload.size() < kRtpHeaderLen) return std::nullopt;
    const std::uint8_t version = payload[0] >> 6;
    if (version != 2) return std::nullopt;
    RtpHeader h;
    h.version = version;
    h.padding = (payload[0] & 0x20) != 0;
    h.marker = (payload[1] & 0x80) != 0;
    h.payload_type = payload[1] & 0x7F;
    h.seq = static_cast<std::uint16_t>((payload[2] << 8) | payload[3]);
    h.timestamp = (static_cast<std::uint32_t>(payload[4]) << 24) |
                  (static_cast<std::uint32_t>(payload[5]) << 16) |
                  (static_cast<std::uint32_t>(payload[6]) << 8) | payload[7];
    h.ssrc = (static_cast<std::uint32_t>(payload[8]) << 24) |
             (static_cast<std::uint32_t>(payload[9]) << 16) |
             (static_cast<std::uint32_t>(payload[10]) << 8) | payload[11];
    return h;
}

void encode_rtp(const RtpHeader& h, std::uint8_t out[kRtpHeaderLen]) {
    out[0] = static_cast<std::uint8_t>((h.version << 6) | (h.padding ? 0x20 : 0));
    out[1] = static_cast<std::uint8_t>((h.marker ? 0x80 : 0) | (h.payload_type & 0x7F));
    out[2] = static_cast<std::uint8_t>(h.seq >> 8);
    out[3] = static_cast<std::uint8_t>(h.seq & 0xFF);
    out[4] = static_cast<std::uint8_t>(h.timestamp >> 24);
    out[5] = static_cast<std::uint8_t>(h.timestamp >> 16);
    out[6] = static_cast<std::uint8_t>(h.timestamp >> 8);
    out[7] = static_cast<std::uint8_t>(h.timestamp);
    out[8] = static_cast<std::uint8_t>(h.ssrc >> 24);
    out[9] = static_cast<std::uint8_t>(h.ssrc >> 16);
    out[10] = static_cast<std::uint8_t>(h.ssrc >> 8);
    out[11] = static_cast<std::uint8_t>(h.ssrc);
}

}  // namespace posmac
