#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "posmac/core.hpp"

namespace posmac {

inline constexpr std::uint32_t kPcapMagic = 0xA1B2C3D4u;
inline constexpr std::uint32_t kPcapMagicSwapped = 0xD4C3B2A1u;
inline constexpr std::uint32_t kPcapSnaplen = 65535;
inline constexpr std::uint32_t kLinkTypeEthernet = 1;

// Ground truth for generated traffic: one (flow, label) row per flow,
// shipped as a sidecar CSV next to the pcap.
class GroundTruth {
public:
    void add(const FlowKey& key, ClassLabel label);  // throws Error on duplicate key
    std::optional<ClassLabel> lookup(const FlowKey& key) const;
    const std::vector<std::pair<FlowKey, ClassLabel>>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }

private:
    std::vector<std::pair<FlowKey, ClassLabel>> rows_;
    std::unordered_map<FlowKey, ClassLabel, FlowKeyHash> index_;
};

struct PcapReadResult {
    std::uint32_t link_type = kLinkTypeEthernet;
    std::vector<Packet> packets;
    // records skipped at ingest: non-IPv4 ethertype (incl. IPv6), non-UDP protocol
    std::uint64_t skipped_records = 0;
};

// Classic pcap only. Accepts both magics; Ethernet/IPv4/UDP headers are
// stripped into Packet fields, everything else is skipped and counted.
PcapReadResult read_pcap(std::span<const std::uint8_t> bytes);
PcapReadResult read_pcap_file(const std::string& path);

// Writes native byte order, version 2.4, snaplen 65535. Each packet gets a
// synthesized Ethernet/IPv4/UDP encapsulation; read_pcap(write_pcap(p)) == p.
std::vector<std::uint8_t> write_pcap(std::uint32_t link_type, const std::vector<Packet>& packets);
void write_pcap_file(const std::string& path, std::uint32_t link_type,
                     const std::vector<Packet>& packets);

// Sidecar CSV: header src_ip,src_port,dst_ip,dst_port,proto,label; LF endings.
std::string write_sidecar_csv(const GroundTruth& truth);
void write_sidecar_file(const std::string& path, const GroundTruth& truth);
GroundTruth read_sidecar_csv(std::string_view text);
GroundTruth read_sidecar_file(const std::string& path);

}  // namespace posmac
