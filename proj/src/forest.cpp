#include "posmac/forest.hpp"

#include <algorithm>
#include <numeric>

#include "posmac/errors.hpp"

namespace posmac {

void Dataset::add_row(std::span<const double> x, ClassLabel y, std::uint32_t weight) {
    if (x.size() != n_features_) throw DimensionMismatch("dataset: row has wrong feature count");
    if (weight < 1) throw Error("dataset: weight must be >= 1");
    x_.insert(x_.end(), x.begin(), x.end());
    y_.push_back(y);
    w_.push_back(weight);
}

std::uint64_t Dataset::total_weight() const {
    return std::accumulate(w_.begin(), w_.end(), std::uint64_t{0});
}

Dataset Dataset::from_windows(const std::vector<LabeledWindow>& rows) {
    Dataset d(kNumFeatures);
    for (const auto& r : rows) d.add_row(r.vec.f, r.label);
    return d;
}

std::vector<std::uint32_t> expand_instances(const Dataset& data) {
    std::vector<std::uint32_t> inst;
    inst.reserve(data.total_weight());
    for (std::size_t r = 0; r < data.n_rows(); ++r)
        for (std::uint32_t k = 0; k < data.weight(r); ++k)
            inst.push_back(static_cast<std::uint32_t>(r));
    return inst;
}

namespace {

// Split quality is compared as the exact rational
//   (P_L*N_R + P_R*N_L) / (N_L*N_R),  P = sum of squared class counts,
// which orders splits identically to weighted Gini but with no float
// rounding, so ties resolve exactly the same way in any implementation.
struct SplitScore {
    unsigned __int128 num = 0;
    unsigned __int128 den = 1;

    bool better_than(const SplitScore& o) const { return num * o.den > o.num * den; }
};

SplitScore score_children(const std::array<std::uint64_t, kNumClasses>& left,
                          const std::array<std::uint64_t, kNumClasses>& right) {
    std::uint64_t nl = 0, nr = 0;
    unsigned __int128 pl = 0, pr = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        nl += left[c];
        nr += right[c];
        pl += static_cast<unsigned __int128>(left[c]) * left[c];
        pr += static_cast<unsigned __int128>(right[c]) * right[c];
    }
    return SplitScore{pl * nr + pr * nl, static_cast<unsigned __int128>(nl) * nr};
}

}  // namespace

std::optional<Split> best_split(const Dataset& data, std::span<const std::uint32_t> instances,
                                std::span<const std::size_t> candidate_features) {
    const std::uint64_t n = instances.size();
    if (n < 2) return std::nullopt;

    std::array<std::uint64_t, kNumClasses> total{};
    for (std::uint32_t r : instances) ++total[label_code(data.label(r))];
    unsigned __int128 p_total = 0;
    for (int c = 0; c < kNumClasses; ++c)
        p_total += static_cast<unsigned __int128>(total[c]) * total[c];

    std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());

    std::vector<std::pair<double, std::uint8_t>> vals;
    vals.reserve(n);

    bool found = false;
    Split best{};
    SplitScore best_score{};

    for (std::size_t f : features) {
        vals.clear();
        for (std::uint32_t r : instances) vals.emplace_back(data.at(r, f), label_code(data.label(r)));
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::array<std::uint64_t, kNumClasses> left{};
        std::array<std::uint64_t, kNumClasses> right = total;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            ++left[vals[i].second];
            --right[vals[i].second];
            if (vals[i].first == vals[i + 1].first) continue;  // only distinct-value boundaries

            const SplitScore s = score_children(left, right);
            // strict impurity reduction: S_children > P_total/N  <=>  num*N > P_total*den
            if (!(s.num * n > p_total * s.den)) continue;
            if (!found || s.better_than(best_score)) {
                found = true;
                best_score = s;
                best.feature = f;
                best.threshold = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
                const double nl_nr = static_cast<double>(s.den);
                const double decrease =
                    (static_cast<double>(s.num) / nl_nr - static_cast<double>(p_total) / static_cast<double>(n)) /
                    static_cast<double>(n);
                best.impurity_decrease = decrease;
            }
        }
    }
    if (!found) return std::nullopt;
    return best;
}

namespace {

struct TreeBuilder {
    const Dataset& data;
    const TrainParams& params;
    SplitMix64& rng;
    std::vector<TreeNode> nodes;
    std::vector<std::size_t> all_features;

    std::uint32_t build(std::vector<std::uint32_t>& instances, std::uint32_t depth) {
        const auto idx = static_cast<std::uint32_t>(nodes.size());
        nodes.emplace_back();

        std::array<std::uint64_t, kNumClasses> counts{};
        for (std::uint32_t r : instances) ++counts[label_code(data.label(r))];
        int classes_present = 0;
        for (int c = 0; c < kNumClasses; ++c) classes_present += counts[c] > 0;

        const bool stop = classes_present <= 1 || depth >= params.max_depth ||
                          instances.size() < params.min_samples_split;

        std::optional<Split> split;
        if (!stop) {
            if (params.features_per_split < data.n_features()) {
                std::vector<std::size_t> cand = all_features;
                partial_shuffle(cand, params.features_per_split, rng);
                cand.resize(params.features_per_split);
                split = best_split(data, instances, cand);
            } else {
                split = best_split(data, instances, all_features);
            }
        }

        if (!split) {
            nodes[idx].is_leaf = 1;
            for (int c = 0; c < kNumClasses; ++c)
                nodes[idx].counts[c] = static_cast<std::uint32_t>(counts[c]);
            return idx;
        }

        nodes[idx].is_leaf = 0;
        nodes[idx].feature = static_cast<std::uint8_t>(split->feature);
        nodes[idx].threshold = split->threshold;

        std::vector<std::uint32_t> left_rows, right_rows;
        left_rows.reserve(instances.size());
        right_rows.reserve(instances.size());
        for (std::uint32_t r : instances) {
            if (data.at(r, split->feature) <= split->threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        }
        instances.clear();
        instances.shrink_to_fit();

        const std::uint32_t left = build(left_rows, depth + 1);
        nodes[idx].left = left;
        const std::uint32_t right = build(right_rows, depth + 1);
        nodes[idx].right = right;
        return idx;
    }
};

}  // namespace

DecisionTree train_tree(const Dataset& data, const TrainParams& params, SplitMix64& rng) {
    if (data.n_rows() == 0) throw EmptyDataset("train_tree: empty dataset");
    TreeBuilder builder{data, params, rng, {}, {}};
    builder.all_features.resize(data.n_features());
    std::iota(builder.all_features.begin(), builder.all_features.end(), 0);

    std::vector<std::uint32_t> instances = expand_instances(data);
    builder.build(instances, 0);

    DecisionTree tree;
    tree.nodes = std::move(builder.nodes);
    tree.n_features = static_cast<std::uint32_t>(data.n_features());
    return tree;
}

Model train_forest(const Dataset& data, const TrainParams& params) {
    if (data.n_rows() == 0) throw EmptyDataset("train_forest: empty dataset");
    if (params.n_trees < 1) throw Error("train_forest: n_trees must be >= 1");

    Model model;
    model.kind = ModelKind::Forest;
    model.seed = params.seed;
    model.trees.reserve(params.n_trees);

    const std::vector<std::uint32_t> base = expand_instances(data);
    for (std::uint32_t t = 0; t < params.n_trees; ++t) {
        SplitMix64 rng(derive_seed(params.seed, t));
        std::vector<std::uint32_t> instances;
        if (params.bootstrap) {
            instances.resize(base.size());
            for (std::size_t i = 0; i < base.size(); ++i)
                instances[i] = base[rng.below(base.size())];
        } else {
            instances = base;
        }

        TreeBuilder builder{data, params, rng, {}, {}};
        builder.all_features.resize(data.n_features());
        std::iota(builder.all_features.begin(), builder.all_features.end(), 0);
        builder.build(instances, 0);

        DecisionTree tree;
        tree.nodes = std::move(builder.nodes);
        tree.n_features = static_cast<std::uint32_t>(data.n_features());
        model.trees.push_back(std::move(tree));
    }
    return model;
}

Model train_single_tree(const Dataset& data, const TrainParams& params) {
    TrainParams p = params;
    p.features_per_split = static_cast<std::uint32_t>(data.n_features());
    p.bootstrap = false;
    SplitMix64 rng(derive_seed(p.seed, 0));
    Model model;
    model.kind = ModelKind::Tree;
    model.seed = p.seed;
    model.trees.push_back(train_tree(data, p, rng));
    return model;
}

Model train_model(ModelKind kind, const Dataset& data, const TrainParams& params) {
    return kind == ModelKind::Tree ? train_single_tree(data, params) : train_forest(data, params);
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
    const TreeNode* node = &nodes[0];
    while (!node->is_leaf) node = &nodes[x[node->feature] <= node->threshold ? node->left : node->right];
    return *node;
}

Prediction Model::predict(std::span<const double> x) const {
    if (trees.empty()) throw Error("predict: model has no trees");
    if (x.size() != trees[0].n_features) throw DimensionMismatch("predict: wrong feature count");

    // soft vote: sum per-leaf class probability vectors
    std::array<double, kNumClasses> mass{};
    for (const DecisionTree& tree : trees) {
        const TreeNode& leaf = tree.leaf_for(x);
        double total = 0.0;
        for (int c = 0; c < kNumClasses; ++c) total += leaf.counts[c];
        for (int c = 0; c < kNumClasses; ++c)
            mass[c] += static_cast<double>(leaf.counts[c]) / total;
    }

    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
        if (mass[c] > mass[best]) best = c;  // ties keep the lowest label order

    Prediction pred;
    pred.label = static_cast<ClassLabel>(best);
    pred.confidence = mass[best] / static_cast<double>(trees.size());
    return pred;
}

EvalResult evaluate(const Model& model, const Dataset& data) {
    if (data.n_rows() == 0) throw EmptyDataset("evaluate: empty dataset");
    EvalResult res;
    std::uint64_t correct = 0, total = 0;
    std::vector<double> x(data.n_features());
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        for (std::size_t c = 0; c < data.n_features(); ++c) x[c] = data.at(r, c);
        const Prediction p = model.predict(x);
        const std::uint64_t w = data.weight(r);
        res.confusion[label_code(data.label(r))][label_code(p.label)] += w;
        total += w;
        if (p.label == data.label(r)) correct += w;
    }
    res.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    return res;
}

}  // namespace posmac
