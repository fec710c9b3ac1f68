// posmac — desk-scale online traffic-classification loop.
// Subcommands: run, synth, train, eval, bench.

#include <chrono>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "posmac/errors.hpp"
#include "posmac/harness.hpp"
#include "posmac/replay.hpp"

namespace {

using namespace posmac;

std::vector<std::uint8_t> read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_binary(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

int cmd_run(const std::string& config_path) {
    const RunConfig cfg = load_config(config_path);
    const MetricsReport report = run(cfg);
    write_report_files(cfg, report);
    std::cout << format_report_text(report);
    return 0;
}

int cmd_synth(const std::string& profile_name, std::size_t flows, double duration,
              std::uint64_t seed, const std::string& out_pcap, const std::string& out_labels) {
    SynthResult result;
    if (profile_name == "mixed") {
        const auto profiles = default_profiles();
        result = synth_mixed(profiles, flows, duration, seed);
    } else {
        ClassLabel label;
        if (profile_name == "ar")
            label = ClassLabel::AR;
        else if (profile_name == "cg")
            label = ClassLabel::CG;
        else if (profile_name == "other")
            label = ClassLabel::Other;
        else
            throw ConfigError("unknown profile " + profile_name + " (ar|cg|other|mixed)");
        result = synth_traffic(default_profile(label), flows, duration, seed);
    }
    write_pcap_file(out_pcap, kLinkTypeEthernet, result.packets);
    write_sidecar_file(out_labels, result.truth);
    std::cout << "wrote " << result.packets.size() << " packets, " << result.truth.size()
              << " flows\n";
    return 0;
}

int cmd_train(const std::string& data_path, const std::string& kind_name,
              const std::string& out_path, TrainParams params, std::uint32_t version) {
    const ModelKind kind = kind_name == "dt" ? ModelKind::Tree : ModelKind::Forest;
    if (kind_name != "dt" && kind_name != "rf")
        throw ConfigError("--kind must be dt or rf");
    const auto rows = read_labeled_file(data_path);
    if (rows.empty()) throw EmptyDataset("train: no rows in " + data_path);
    const Model model = train_model(kind, Dataset::from_windows(rows), params);
    write_binary(out_path, serialize_model(model, version));
    std::cout << "trained " << kind_name << " on " << rows.size() << " rows -> " << out_path
              << " (version " << version << ")\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& pcap_path,
             const std::string& labels_path, std::uint32_t window) {
    const DeserializedModel d = deserialize_model(read_binary(model_path));
    const auto packets = read_pcap_file(pcap_path).packets;
    const GroundTruth truth = read_sidecar_file(labels_path);
    const EvalResult res = eval_envelope(d.model, packets, truth, window);
    std::cout << "accuracy=" << res.accuracy << '\n';
    const char* names[3] = {"AR", "CG", "other"};
    for (int i = 0; i < 3; ++i) {
        std::cout << names[i] << ":";
        for (int j = 0; j < 3; ++j) std::cout << ' ' << res.confusion[i][j];
        std::cout << '\n';
    }
    return 0;
}

int cmd_bench(const std::string& pcap_path, const std::string& model_path, std::size_t workers,
              std::uint32_t window) {
    const auto packets = read_pcap_file(pcap_path).packets;
    if (packets.empty()) throw Error("bench: no packets in " + pcap_path);

    Model model;
    if (!model_path.empty()) {
        model = deserialize_model(read_binary(model_path)).model;
    } else {
        // default model: forest trained on a small synthetic slice
        const auto profiles = default_profiles();
        const SynthResult synth = synth_mixed(profiles, 4, 4.0, 1);
        const auto rows = extract_labeled_windows(synth.packets, synth.truth, window);
        model = train_forest(Dataset::from_windows(rows), TrainParams{});
    }

    ClassifierPipeline::Config pcfg;
    pcfg.window = window;
    pcfg.shards = workers;
    ClassifierPipeline pipeline(pcfg, std::move(model), 1);

    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    if (workers <= 1) {
        for (const Packet& p : packets) pipeline.process(0, p);
    } else {
        // pre-partition by flow, then run the shards in parallel
        std::vector<std::vector<const Packet*>> parts(workers);
        for (const Packet& p : packets)
            parts[pipeline.shard_of(flow_key(p))].push_back(&p);
        std::vector<std::thread> threads;
        for (std::size_t s = 0; s < workers; ++s)
            threads.emplace_back([&, s] {
                for (const Packet* p : parts[s]) pipeline.process(s, *p);
            });
        for (auto& t : threads) t.join();
    }
    const double elapsed = std::chrono::duration<double>(clock::now() - start).count();

    const auto counters = pipeline.counters();
    std::cout << "packets=" << counters.packets_in << '\n'
              << "windows=" << counters.windows_classified << '\n'
              << "elapsed_s=" << elapsed << '\n'
              << "pkts_per_s=" << static_cast<double>(counters.packets_in) / elapsed << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"posmac: online AR/CG/other traffic classification loop"};
    app.require_subcommand(1);

    std::string config_path;
    auto* sc_run = app.add_subcommand("run", "run the full loop from a config file");
    sc_run->add_option("--config", config_path, "INI config file")->required();

    std::string profile = "mixed", out_pcap, out_labels;
    std::size_t flows = 10;
    double duration = 30.0;
    std::uint64_t seed = 42;
    auto* sc_synth = app.add_subcommand("synth", "generate labeled synthetic traffic");
    sc_synth->add_option("--profile", profile, "ar|cg|other|mixed (default mixed)");
    sc_synth->add_option("--flows", flows, "flows (per class for mixed)");
    sc_synth->add_option("--duration", duration, "seconds of traffic");
    sc_synth->add_option("--seed", seed, "generator seed");
    sc_synth->add_option("--out", out_pcap, "output pcap path")->required();
    sc_synth->add_option("--labels", out_labels, "output sidecar CSV path")->required();

    std::string data_path, kind = "rf", model_out;
    TrainParams params;
    std::uint32_t version = 1;
    auto* sc_train = app.add_subcommand("train", "train a model from a labeled CSV");
    sc_train->add_option("--data", data_path, "labeled feature CSV")->required();
    sc_train->add_option("--kind", kind, "dt|rf (default rf)");
    sc_train->add_option("--out", model_out, "output envelope path")->required();
    sc_train->add_option("--trees", params.n_trees, "forest size");
    sc_train->add_option("--max-depth", params.max_depth, "tree depth limit");
    sc_train->add_option("--seed", params.seed, "training seed");
    sc_train->add_option("--version", version, "model version to stamp");

    std::string model_path, pcap_path, labels_path;
    std::uint32_t window = 30;
    auto* sc_eval = app.add_subcommand("eval", "evaluate an envelope against pcap+sidecar");
    sc_eval->add_option("--model", model_path, "model envelope")->required();
    sc_eval->add_option("--pcap", pcap_path, "input pcap")->required();
    sc_eval->add_option("--labels", labels_path, "ground-truth sidecar CSV")->required();
    sc_eval->add_option("--window", window, "extractor window (default 30)");

    std::string bench_pcap, bench_model;
    std::size_t bench_workers = 1;
    std::uint32_t bench_window = 30;
    auto* sc_bench = app.add_subcommand("bench", "measure packet-path throughput");
    sc_bench->add_option("--pcap", bench_pcap, "input pcap")->required();
    sc_bench->add_option("--model", bench_model, "model envelope (default: built-in)");
    sc_bench->add_option("--workers", bench_workers, "shard count");
    sc_bench->add_option("--window", bench_window, "extractor window");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sc_run->parsed()) return cmd_run(config_path);
        if (sc_synth->parsed()) return cmd_synth(profile, flows, duration, seed, out_pcap, out_labels);
        if (sc_train->parsed()) return cmd_train(data_path, kind, model_out, params, version);
        if (sc_eval->parsed()) return cmd_eval(model_path, pcap_path, labels_path, window);
        if (sc_bench->parsed())
            return cmd_bench(bench_pcap, bench_model, bench_workers, bench_window);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
