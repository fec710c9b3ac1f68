#include "posmac/synth.hpp"

#include <algorithm>
#include <cmath>

#include "posmac/errors.hpp"
#include "posmac/rng.hpp"

namespace posmac {

TrafficProfile default_profile(ClassLabel label) {
    TrafficProfile p;
    p.label = label;
    p.mtu_payload_bytes = 1200;
    p.rtp = true;
    switch (label) {
        case ClassLabel::CG:
            p.frame_rate_hz = 60.0;
            p.frame_interval_jitter_us = 1500.0;
            p.frame_size_mean_bytes = 8000.0;
            p.frame_size_std_bytes = 2000.0;
            p.intra_frame_ipi_mean_us = 200.0;
            p.intra_frame_ipi_std_us = 80.0;
            break;
        case ClassLabel::AR:
            p.frame_rate_hz = 30.0;
            p.frame_interval_jitter_us = 2500.0;
            p.frame_size_mean_bytes = 15000.0;
            p.frame_size_std_bytes = 4000.0;
            p.intra_frame_ipi_mean_us = 250.0;
            p.intra_frame_ipi_std_us = 100.0;
            break;
        case ClassLabel::Other:
            p.frame_rate_hz = 25.0;
            p.frame_interval_jitter_us = 2000.0;
            p.frame_size_mean_bytes = 4000.0;
            p.frame_size_std_bytes = 1500.0;
            p.intra_frame_ipi_mean_us = 400.0;
            p.intra_frame_ipi_std_us = 150.0;
            break;
    }
    return p;
}

namespace {

void check_profile(const TrafficProfile& p) {
    if (!(p.frame_rate_hz > 0)) throw InvalidProfile("frame_rate_hz must be > 0");
    if (p.mtu_payload_bytes < 64) throw InvalidProfile("mtu_payload_bytes must be >= 64");
    if (p.frame_interval_jitter_us < 0 || p.frame_size_std_bytes < 0 || p.intra_frame_ipi_std_us < 0)
        throw InvalidProfile("std devs must be >= 0");
}

// Gaussian tails must not produce invalid traffic: intervals and sizes clamp to 1.
double clamped_gaussian(SplitMix64& rng, double mean, double std) {
    return std::max(1.0, rng.gaussian(mean, std));
}

// Flow endpoints: client 10.<class>.<i/250>.<i%250+1> -> per-class server.
FlowKey make_flow_key(ClassLabel label, std::size_t flow_index) {
    const auto code = static_cast<std::uint32_t>(label_code(label));
    FlowKey k;
    k.src_ip = (10u << 24) | (code << 16) |
               ((static_cast<std::uint32_t>(flow_index) / 250u % 250u) << 8) |
               (static_cast<std::uint32_t>(flow_index) % 250u + 1u);
    k.src_port = static_cast<std::uint16_t>(5004 + (flow_index / 62500) % 100);
    k.dst_ip = (10u << 24) | (100u << 16) | (code << 8) | 10u;
    k.dst_port = static_cast<std::uint16_t>(4000 + code);
    k.proto = 17;
    return k;
}

void synth_flow(const TrafficProfile& profile, std::size_t flow_index, double duration_s,
                std::uint64_t seed, std::vector<Packet>& out) {
    SplitMix64 rng(derive_seed(seed, flow_index));
    const FlowKey key = make_flow_key(profile.label, flow_index);
    const double frame_interval_us = 1e6 / profile.frame_rate_hz;
    const double duration_us = duration_s * 1e6;
    const std::uint32_t rtp_ts_per_frame =
        std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(90000.0 / profile.frame_rate_hz)));
    const std::uint32_t ssrc = static_cast<std::uint32_t>(derive_seed(seed ^ 0x55D0, flow_index));

    // desynchronize flows within one frame interval
    double frame_ts = rng.uniform01() * frame_interval_us;
    std::uint16_t seq = static_cast<std::uint16_t>(rng.below(65536));
    std::uint64_t frame_index = 0;

    while (frame_ts < duration_us) {
        const double frame_size = clamped_gaussian(rng, profile.frame_size_mean_bytes,
                                                   profile.frame_size_std_bytes);
        const auto total = static_cast<std::uint64_t>(std::ceil(frame_size));
        const std::uint64_t mtu = profile.mtu_payload_bytes;
        const std::uint64_t n_packets = (total + mtu - 1) / mtu;

        double pkt_ts = frame_ts;
        std::uint64_t remaining = total;
        for (std::uint64_t i = 0; i < n_packets; ++i) {
            const std::uint64_t chunk = std::min(mtu, remaining);
            remaining -= chunk;

            Packet p;
            p.ts_us = static_cast<std::int64_t>(std::llround(pkt_ts));
            p.src_ip = key.src_ip;
            p.dst_ip = key.dst_ip;
            p.src_port = key.src_port;
            p.dst_port = key.dst_port;
            p.proto = 17;
            if (profile.rtp) {
                p.payload.resize(kRtpHeaderLen + chunk);
                RtpHeader h;
                h.version = 2;
                h.marker = (i + 1 == n_packets);
                h.payload_type = 96;
                h.seq = seq++;
                h.timestamp = static_cast<std::uint32_t>(frame_index) * rtp_ts_per_frame;
                h.ssrc = ssrc;
                encode_rtp(h, p.payload.data());
                for (std::uint64_t b = 0; b < chunk; ++b)
                    p.payload[kRtpHeaderLen + b] = static_cast<std::uint8_t>(h.seq * 131 + b);
            } else {
                p.payload.resize(std::max<std::uint64_t>(chunk, 1));
                for (std::uint64_t b = 0; b < p.payload.size(); ++b)
                    p.payload[b] = static_cast<std::uint8_t>(seq * 131 + b);
                // keep the first byte out of RTP version-2 space
                p.payload[0] = 0x40 | (p.payload[0] & 0x3F);
                ++seq;
            }
            p.wire_len = static_cast<std::uint32_t>(42 + p.payload.size());
            out.push_back(std::move(p));

            if (i + 1 < n_packets)
                pkt_ts += clamped_gaussian(rng, profile.intra_frame_ipi_mean_us,
                                           profile.intra_frame_ipi_std_us);
        }
        frame_ts += clamped_gaussian(rng, frame_interval_us, profile.frame_interval_jitter_us);
        ++frame_index;
    }
}

}  // namespace

SynthResult synth_traffic(const TrafficProfile& profile, std::size_t flows, double duration_s,
                          std::uint64_t seed, std::size_t flow_index_offset) {
    check_profile(profile);
    if (duration_s < 0) throw InvalidProfile("duration_s must be >= 0");

    SynthResult res;
    for (std::size_t i = 0; i < flows; ++i) {
        const std::size_t flow_index = flow_index_offset + i;
        res.truth.add(make_flow_key(profile.label, flow_index), profile.label);
        synth_flow(profile, flow_index, duration_s, seed, res.packets);
    }
    std::stable_sort(res.packets.begin(), res.packets.end(),
                     [](const Packet& a, const Packet& b) { return a.ts_us < b.ts_us; });
    return res;
}

SynthResult synth_mixed(std::span<const TrafficProfile> profiles, std::size_t flows_per_profile,
                        double duration_s, std::uint64_t seed, std::size_t flow_index_offset) {
    SynthResult res;
    for (std::size_t pi = 0; pi < profiles.size(); ++pi) {
        SynthResult one = synth_traffic(profiles[pi], flows_per_profile, duration_s,
                                        derive_seed(seed, pi), flow_index_offset);
        for (const auto& [key, label] : one.truth.rows()) res.truth.add(key, label);
        res.packets.insert(res.packets.end(), std::make_move_iterator(one.packets.begin()),
                           std::make_move_iterator(one.packets.end()));
    }
    std::stable_sort(res.packets.begin(), res.packets.end(),
                     [](const Packet& a, const Packet& b) { return a.ts_us < b.ts_us; });
    return res;
}

}  // namespace posmac
