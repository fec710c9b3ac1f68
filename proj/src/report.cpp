#include <cstdio>
#include <fstream>
#include <sstream>

#include "posmac/errors.hpp"
#include "posmac/harness.hpp"

namespace posmac {

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[48];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

}  // namespace

std::string format_report_text(const MetricsReport& r) {
    std::ostringstream out;
    out << "=== run report ===\n";
    out << "packets_in:            " << r.packets_in << '\n';
    out << "delivered AR/CG/other: " << r.delivered[0] << " / " << r.delivered[1] << " / "
        << r.delivered[2] << '\n';
    out << "drops:                 " << r.drops << '\n';
    out << "pre-decision packets:  " << r.pre_decision_packets << '\n';
    out << "windows classified:    " << r.windows_classified << '\n';
    out << "decisions with truth:  " << r.decisions_with_truth << '\n';
    out << "accuracy:              " << fmt(r.accuracy) << '\n';
    out << "confusion (true x predicted):\n";
    const char* names[3] = {"AR", "CG", "other"};
    for (int i = 0; i < 3; ++i) {
        out << "  " << names[i] << ":";
        for (int j = 0; j < 3; ++j) out << ' ' << r.confusion[i][j];
        out << '\n';
    }
    out << "accuracy per model version:\n";
    for (const auto& [version, ct] : r.per_version) {
        const auto [correct, total] = ct;
        out << "  v" << version << ": " << fmt(total ? double(correct) / double(total) : 0.0)
            << " (" << total << " windows)\n";
    }
    out << "throughput:            " << fmt(r.throughput_pps, "%.0f") << " pkts/s\n";
    out << "latency mean/p95:      " << fmt(r.latency_mean_us, "%.3f") << " / "
        << fmt(r.latency_p95_us, "%.3f") << " us\n";
    out << "wall time:             " << fmt(r.wall_s, "%.3f") << " s\n";
    out << "misrouted packets:     " << r.misrouted_packets << '\n';
    out << "correctly routed:      " << r.correctly_routed_packets << '\n';
    out << "unknown-flow packets:  " << r.unknown_flow_packets << '\n';
    out << "joined samples:        " << r.joined_samples << '\n';
    out << "expired features:      " << r.expired_features << '\n';
    out << "feature entries dropped: " << r.feature_entries_dropped << '\n';
    out << "model timeline:\n";
    for (const auto& ev : r.timeline) {
        out << "  v" << ev.version << " " << ev.reason << " at_ts=" << ev.at_packet_ts_us
            << "us wall=" << fmt(ev.wall_s, "%.3f") << "s rows=" << ev.training_rows
            << " moving_acc=" << fmt(ev.post_swap_moving_accuracy) << '\n';
    }
    return out.str();
}

std::string format_report_kv(const MetricsReport& r) {
    std::ostringstream out;
    // deterministic fields first, wall-clock metrics at the end
    out << "packets_in=" << r.packets_in << '\n';
    out << "delivered_ar=" << r.delivered[0] << '\n';
    out << "delivered_cg=" << r.delivered[1] << '\n';
    out << "delivered_other=" << r.delivered[2] << '\n';
    out << "drops=" << r.drops << '\n';
    out << "pre_decision_packets=" << r.pre_decision_packets << '\n';
    out << "windows_classified=" << r.windows_classified << '\n';
    out << "decisions_with_truth=" << r.decisions_with_truth << '\n';
    out << "accuracy=" << fmt(r.accuracy, "%.9f") << '\n';
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out << "confusion_" << i << '_' << j << '=' << r.confusion[i][j] << '\n';
    for (const auto& [version, ct] : r.per_version) {
        const auto [correct, total] = ct;
        out << "version_" << version << "_correct=" << correct << '\n';
        out << "version_" << version << "_total=" << total << '\n';
    }
    out << "misrouted_packets=" << r.misrouted_packets << '\n';
    out << "correctly_routed_packets=" << r.correctly_routed_packets << '\n';
    out << "unknown_flow_packets=" << r.unknown_flow_packets << '\n';
    out << "joined_samples=" << r.joined_samples << '\n';
    out << "expired_features=" << r.expired_features << '\n';
    out << "feature_entries_dropped=" << r.feature_entries_dropped << '\n';
    out << "timeline_len=" << r.timeline.size() << '\n';
    for (std::size_t i = 0; i < r.timeline.size(); ++i) {
        const auto& ev = r.timeline[i];
        out << "timeline_" << i << "_version=" << ev.version << '\n';
        out << "timeline_" << i << "_reason=" << ev.reason << '\n';
        out << "timeline_" << i << "_at_ts_us=" << ev.at_packet_ts_us << '\n';
        out << "timeline_" << i << "_training_rows=" << ev.training_rows << '\n';
    }
    out << "throughput_pps=" << fmt(r.throughput_pps, "%.1f") << '\n';
    out << "latency_mean_us=" << fmt(r.latency_mean_us, "%.3f") << '\n';
    out << "latency_p95_us=" << fmt(r.latency_p95_us, "%.3f") << '\n';
    out << "wall_s=" << fmt(r.wall_s, "%.3f") << '\n';
    return out.str();
}

void write_report_files(const RunConfig& config, const MetricsReport& r) {
    if (!config.report_text_path.empty())
        write_file(config.report_text_path, format_report_text(r));
    if (!config.report_kv_path.empty()) write_file(config.report_kv_path, format_report_kv(r));
    if (!config.decision_log_path.empty())
        write_file(config.decision_log_path, write_decision_csv(r.decisions));
    if (!config.misroute_log_path.empty())
        write_file(config.misroute_log_path, write_misroute_csv(r.misroutes));
}

}  // namespace posmac
