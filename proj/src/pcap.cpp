#include "posmac/pcap.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "posmac/errors.hpp"

namespace posmac {

namespace {

constexpr std::size_t kGlobalHeaderLen = 24;
constexpr std::size_t kRecordHeaderLen = 16;
constexpr std::size_t kEthLen = 14;
constexpr std::size_t kIpv4Len = 20;  // no options written
constexpr std::size_t kUdpLen = 8;
constexpr std::uint16_t kEthertypeIpv4 = 0x0800;

// little-endian codec; the swapped path byte-reverses on top of this
std::uint32_t get_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t get_u16le(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint16_t get_u16be(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}
std::uint32_t get_u32be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}
std::uint32_t bswap32(std::uint32_t v) {
    return ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
}

void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}
void put_u16be(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}
void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

std::uint16_t ipv4_checksum(const std::uint8_t* hdr, std::size_t len) {
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i + 1 < len; i += 2) sum += get_u16be(hdr + i);
    while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

// Ethernet/IPv4/UDP dissection of one captured frame. Returns false when the
// frame is anything else (caller counts it as a skipped record).
bool dissect_udp(const std::uint8_t* data, std::size_t len, Packet& out) {
    if (len < kEthLen + kIpv4Len + kUdpLen) return false;
    if (get_u16be(data + 12) != kEthertypeIpv4) return false;
    const std::uint8_t* ip = data + kEthLen;
    if ((ip[0] >> 4) != 4) return false;
    const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0F) * 4;
    if (ihl < kIpv4Len || kEthLen + ihl + kUdpLen > len) return false;
    if (ip[9] != 17) return false;
    const std::uint8_t* udp = ip + ihl;
    const std::uint16_t udp_len = get_u16be(udp + 4);
    if (udp_len < kUdpLen) return false;
    const std::size_t payload_len = udp_len - kUdpLen;
    if (kEthLen + ihl + kUdpLen + payload_len > len) return false;

    out.src_ip = get_u32be(ip + 12);
    out.dst_ip = get_u32be(ip + 16);
    out.proto = 17;
    out.src_port = get_u16be(udp);
    out.dst_port = get_u16be(udp + 2);
    out.payload.assign(udp + kUdpLen, udp + kUdpLen + payload_len);
    return true;
}

}  // namespace

void GroundTruth::add(const FlowKey& key, ClassLabel label) {
    if (!index_.emplace(key, label).second)
        throw Error("ground truth: duplicate flow key " + ipv4_to_string(key.src_ip));
    rows_.emplace_back(key, label);
}

std::optional<ClassLabel> GroundTruth::lookup(const FlowKey& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

PcapReadResult read_pcap(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kGlobalHeaderLen) throw BadMagic("pcap: file shorter than global header");
    const std::uint32_t magic = get_u32le(bytes.data());
    bool swapped = false;
    if (magic == kPcapMagicSwapped) {
        swapped = true;
    } else if (magic != kPcapMagic) {
        throw BadMagic("pcap: bad magic");
    }
    auto rd32 = [swapped](const std::uint8_t* p) {
        const std::uint32_t v = get_u32le(p);
        return swapped ? bswap32(v) : v;
    };

    PcapReadResult res;
    res.link_type = rd32(bytes.data() + 20);
    if (res.link_type != kLinkTypeEthernet)
        throw UnsupportedLinkType("pcap: link type " + std::to_string(res.link_type));

    std::size_t off = kGlobalHeaderLen;
    while (off < bytes.size()) {
        if (off + kRecordHeaderLen > bytes.size())
            throw TruncatedRecord("pcap: truncated record header");
        const std::uint32_t ts_sec = rd32(bytes.data() + off);
        const std::uint32_t ts_usec = rd32(bytes.data() + off + 4);
        const std::uint32_t incl_len = rd32(bytes.data() + off + 8);
        const std::uint32_t orig_len = rd32(bytes.data() + off + 12);
        off += kRecordHeaderLen;
        if (off + incl_len > bytes.size()) throw TruncatedRecord("pcap: truncated record data");

        Packet p;
        if (dissect_udp(bytes.data() + off, incl_len, p)) {
            p.ts_us = static_cast<std::int64_t>(ts_sec) * 1000000 + ts_usec;
            p.wire_len = orig_len;
            res.packets.push_back(std::move(p));
        } else {
            ++res.skipped_records;
        }
        off += incl_len;
    }
    return res;
}

PcapReadResult read_pcap_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return read_pcap(bytes);
}

std::vector<std::uint8_t> write_pcap(std::uint32_t link_type, const std::vector<Packet>& packets) {
    if (link_type != kLinkTypeEthernet)
        throw UnsupportedLinkType("pcap: can only write Ethernet link type");

    std::vector<std::uint8_t> out;
    out.reserve(kGlobalHeaderLen + packets.size() * 80);
    put_u32le(out, kPcapMagic);
    put_u16le(out, 2);  // version 2.4
    put_u16le(out, 4);
    put_u32le(out, 0);  // thiszone
    put_u32le(out, 0);  // sigfigs
    put_u32le(out, kPcapSnaplen);
    put_u32le(out, link_type);

    for (const Packet& p : packets) {
        const std::size_t frame_len = kEthLen + kIpv4Len + kUdpLen + p.payload.size();
        if (frame_len > kPcapSnaplen)
            throw Error("pcap: packet payload does not fit snaplen");

        put_u32le(out, static_cast<std::uint32_t>(p.ts_us / 1000000));
        put_u32le(out, static_cast<std::uint32_t>(p.ts_us % 1000000));
        put_u32le(out, static_cast<std::uint32_t>(frame_len));
        put_u32le(out, p.wire_len);

        // Ethernet: fixed locally administered MACs; not part of the Packet model
        const std::uint8_t dst_mac[6] = {0x02, 0, 0, 0, 0, 0x02};
        const std::uint8_t src_mac[6] = {0x02, 0, 0, 0, 0, 0x01};
        out.insert(out.end(), dst_mac, dst_mac + 6);
        out.insert(out.end(), src_mac, src_mac + 6);
        put_u16be(out, kEthertypeIpv4);

        // IPv4, no options
        const std::size_t ip_off = out.size();
        out.push_back(0x45);
        out.push_back(0);
        put_u16be(out, static_cast<std::uint16_t>(kIpv4Len + kUdpLen + p.payload.size()));
        put_u16be(out, 0);      // id
        put_u16be(out, 0);      // flags/frag
        out.push_back(64);      // ttl
        out.push_back(17);      // udp
        put_u16be(out, 0);      // checksum placeholder
        put_u32be(out, p.src_ip);
        put_u32be(out, p.dst_ip);
        const std::uint16_t csum = ipv4_checksum(out.data() + ip_off, kIpv4Len);
        out[ip_off + 10] = static_cast<std::uint8_t>(csum >> 8);
        out[ip_off + 11] = static_cast<std::uint8_t>(csum & 0xFF);

        // UDP, checksum 0 (legal for IPv4)
        put_u16be(out, p.src_port);
        put_u16be(out, p.dst_port);
        put_u16be(out, static_cast<std::uint16_t>(kUdpLen + p.payload.size()));
        put_u16be(out, 0);
        out.insert(out.end(), p.payload.begin(), p.payload.end());
    }
    return out;
}

void write_pcap_file(const std::string& path, std::uint32_t link_type,
                     const std::vector<Packet>& packets) {
    const auto bytes = write_pcap(link_type, packets);
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw Error("cannot write " + path);
    outf.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
}

std::string write_sidecar_csv(const GroundTruth& truth) {
    std::ostringstream out;
    out << "src_ip,src_port,dst_ip,dst_port,proto,label\n";
    for (const auto& [key, label] : truth.rows()) {
        out << ipv4_to_string(key.src_ip) << ',' << key.src_port << ','
            << ipv4_to_string(key.dst_ip) << ',' << key.dst_port << ','
            << static_cast<unsigned>(key.proto) << ',' << label_name(label) << '\n';
    }
    return out.str();
}

void write_sidecar_file(const std::string& path, const GroundTruth& truth) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw Error("cannot write " + path);
    outf << write_sidecar_csv(truth);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

}  // namespace

GroundTruth read_sidecar_csv(std::string_view text) {
    GroundTruth truth;
    std::istringstream in{std::string(text)};
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        const auto f = split_fields(line);
        if (f.size() != 6) throw Error("sidecar: expected 6 fields: " + line);
        const auto src = ipv4_from_string(f[0]);
        const auto dst = ipv4_from_string(f[2]);
        const auto label = label_from_name(f[5]);
        if (!src || !dst || !label) throw Error("sidecar: bad row: " + line);
        FlowKey key;
        key.src_ip = *src;
        key.src_port = static_cast<std::uint16_t>(std::stoul(f[1]));
        key.dst_ip = *dst;
        key.dst_port = static_cast<std::uint16_t>(std::stoul(f[3]));
        key.proto = static_cast<std::uint8_t>(std::stoul(f[4]));
        truth.add(key, *label);
    }
    return truth;
}

GroundTruth read_sidecar_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_sidecar_csv(text);
}

}  // namespace posmac
