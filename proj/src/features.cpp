#include "posmac/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "posmac/errors.hpp"

namespace posmac {

const std::array<const char*, kNumFeatures> kFeatureNames = {
    "mean_ps", "std_ps", "mean_ipi", "std_ipi", "mean_fs", "std_fs", "mean_ifi", "std_ifi"};

namespace {

// mean 0 for empty buffers, population std dev (0 for n <= 1)
std::pair<double, double> mean_pstd(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

}  // namespace

void FeatureExtractor::complete_frame(FlowState& st) {
    st.fs.push_back(st.frame_bytes);
    if (st.has_prev_frame)
        st.ifi.push_back(static_cast<double>(st.frame_first_ts_us - st.prev_frame_first_ts_us));
    st.prev_frame_first_ts_us = st.frame_first_ts_us;
    st.has_prev_frame = true;
    st.frame_open = false;
}

std::optional<FeatureVector> FeatureExtractor::observe(const Packet& p) {
    const FlowKey key = flow_key(p);
    FlowState& st = flows_[key];
    st.last_seen_us = p.ts_us;

    const double payload_len = static_cast<double>(p.payload.size());
    st.ps.push_back(payload_len);
    if (st.has_last_ts) st.ipi.push_back(static_cast<double>(p.ts_us - st.last_pkt_ts_us));
    st.last_pkt_ts_us = p.ts_us;
    st.has_last_ts = true;

    if (const auto rtp = parse_rtp(p.payload)) {
        if (st.frame_open && (!st.frame_is_rtp || st.frame_rtp_ts != rtp->timestamp))
            complete_frame(st);
        if (!st.frame_open) {
            st.frame_open = true;
            st.frame_is_rtp = true;
            st.frame_rtp_ts = rtp->timestamp;
            st.frame_bytes = 0.0;
            st.frame_first_ts_us = p.ts_us;
        }
        st.frame_bytes += payload_len;
        if (rtp->marker) complete_frame(st);
    } else {
        // packet-as-frame fallback; a non-RTP packet also closes any open group
        if (st.frame_open) complete_frame(st);
        st.frame_open = true;
        st.frame_is_rtp = false;
        st.frame_bytes = payload_len;
        st.frame_first_ts_us = p.ts_us;
        complete_frame(st);
    }

    if (++st.packets_in_window < cfg_.window) return std::nullopt;

    FeatureVector v;
    v.flow = key;
    v.window_index = st.window_index++;
    const auto [mean_ps, std_ps] = mean_pstd(st.ps);
    const auto [mean_ipi, std_ipi] = mean_pstd(st.ipi);
    const auto [mean_fs, std_fs] = mean_pstd(st.fs);
    const auto [mean_ifi, std_ifi] = mean_pstd(st.ifi);
    v.f = {mean_ps, std_ps, mean_ipi, std_ipi, mean_fs, std_fs, mean_ifi, std_ifi};

    st.packets_in_window = 0;
    st.ps.clear();
    st.ipi.clear();
    st.fs.clear();
    st.ifi.clear();
    return v;
}

std::vector<FlowKey> FeatureExtractor::flush_expired(std::int64_t now_us,
                                                     std::int64_t idle_timeout_us) {
    std::vector<FlowKey> evicted;
    for (auto it = flows_.begin(); it != flows_.end();) {
        if (now_us - it->second.last_seen_us > idle_timeout_us) {
            evicted.push_back(it->first);
            it = flows_.erase(it);
        } else {
            ++it;
        }
    }
    std::sort(evicted.begin(), evicted.end());
    return evicted;
}

namespace {

void append_key(std::ostringstream& out, const FlowKey& k) {
    out << ipv4_to_string(k.src_ip) << ',' << k.src_port << ',' << ipv4_to_string(k.dst_ip) << ','
        << k.dst_port << ',' << static_cast<unsigned>(k.proto);
}

void append_features(std::ostringstream& out, const FeatureVector& v) {
    char buf[32];
    for (double x : v.f) {
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        out << ',' << buf;
    }
}

const char* kFeatureHeader =
    "src_ip,src_port,dst_ip,dst_port,proto,window_index,"
    "mean_ps,std_ps,mean_ipi,std_ipi,mean_fs,std_fs,mean_ifi,std_ifi";

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

std::string write_features_csv(const std::vector<FeatureVector>& rows) {
    std::ostringstream out;
    out << kFeatureHeader << '\n';
    for (const auto& v : rows) {
        append_key(out, v.flow);
        out << ',' << v.window_index;
        append_features(out, v);
        out << '\n';
    }
    return out.str();
}

std::string write_labeled_csv(const std::vector<LabeledWindow>& rows) {
    std::ostringstream out;
    out << kFeatureHeader << ",label\n";
    for (const auto& r : rows) {
        append_key(out, r.vec.flow);
        out << ',' << r.vec.window_index;
        append_features(out, r.vec);
        out << ',' << label_name(r.label) << '\n';
    }
    return out.str();
}

std::vector<LabeledWindow> read_labeled_csv(std::string_view text) {
    std::vector<LabeledWindow> rows;
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
        if (f.size() != 15) throw Error("labeled csv: expected 15 fields: " + line);
        LabeledWindow r;
        const auto src = ipv4_from_string(f[0]);
        const auto dst = ipv4_from_string(f[2]);
        if (!src || !dst) throw Error("labeled csv: bad address: " + line);
        r.vec.flow.src_ip = *src;
        r.vec.flow.src_port = static_cast<std::uint16_t>(std::stoul(f[1]));
        r.vec.flow.dst_ip = *dst;
        r.vec.flow.dst_port = static_cast<std::uint16_t>(std::stoul(f[3]));
        r.vec.flow.proto = static_cast<std::uint8_t>(std::stoul(f[4]));
        r.vec.window_index = std::stoull(f[5]);
        for (int i = 0; i < kNumFeatures; ++i) r.vec.f[i] = std::stod(f[6 + i]);
        const auto label = label_from_name(f[14]);
        if (!label) throw Error("labeled csv: bad label: " + line);
        r.label = *label;
        rows.push_back(r);
    }
    return rows;
}

std::vector<LabeledWindow> read_labeled_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_labeled_csv(text);
}

void write_labeled_file(const std::string& path, const std::vector<LabeledWindow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << write_labeled_csv(rows);
}

}  // namespace posmac
