#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "posmac/core.hpp"
#include "posmac/features.hpp"
#include "posmac/rng.hpp"

namespace posmac {

struct TrainParams {
    std::uint32_t max_depth = 12;
    std::uint32_t min_samples_split = 4;
    std::uint32_t n_trees = 20;
    std::uint32_t features_per_split = 3;  // ceil(sqrt(8))
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

// Labeled training rows. Integer weights are duplication factors: a row of
// weight w behaves exactly like w copies (used for recency weighting).
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::size_t n_features) : n_features_(n_features) {}

    void add_row(std::span<const double> x, ClassLabel y, std::uint32_t weight = 1);
    std::size_t n_rows() const { return y_.size(); }
    std::size_t n_features() const { return n_features_; }
    double at(std::size_t row, std::size_t col) const { return x_[row * n_features_ + col]; }
    ClassLabel label(std::size_t row) const { return y_[row]; }
    std::uint32_t weight(std::size_t row) const { return w_[row]; }
    std::uint64_t total_weight() const;

    static Dataset from_windows(const std::vector<LabeledWindow>& rows);

private:
    std::size_t n_features_ = kNumFeatures;
    std::vector<double> x_;  // row-major
    std::vector<ClassLabel> y_;
    std::vector<std::uint32_t> w_;
};

// Each dataset row repeated weight times; all training paths count instances,
// which realizes weighted Gini with integer weights exactly.
std::vector<std::uint32_t> expand_instances(const Dataset& data);

// Node array, root at 0, children always at higher indices.
struct TreeNode {
    std::uint8_t is_leaf = 0;
    std::uint8_t feature = 0;
    double threshold = 0.0;  // go left iff x[feature] <= threshold
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::array<std::uint32_t, kNumClasses> counts{};  // leaf class counts

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
    std::uint32_t n_features = kNumFeatures;

    const TreeNode& leaf_for(std::span<const double> x) const;

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

enum class ModelKind : std::uint8_t { Tree = 0, Forest = 1 };

struct Prediction {
    ClassLabel label = ClassLabel::Other;
    double confidence = 0.0;
};

// DT and RF under one roof; a DT is a single unbagged tree, kept distinct so
// the envelope round-trips the kind byte.
struct Model {
    ModelKind kind = ModelKind::Forest;
    std::vector<DecisionTree> trees;
    std::uint64_t seed = 0;  // provenance only, not serialized

    Prediction predict(std::span<const double> x) const;
};

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity_decrease = 0.0;
};

// Best Gini split over the instances, thresholds at midpoints of consecutive
// distinct values, ties to lowest feature then lowest threshold; nullopt when
// no split strictly reduces impurity. Selection compares exact integer
// rationals so tie-breaking is bit-stable.
std::optional<Split> best_split(const Dataset& data, std::span<const std::uint32_t> instances,
                                std::span<const std::size_t> candidate_features);

// Recursive CART. Leaf when pure, at max_depth, below min_samples_split, or
// no improving split. rng drives per-node feature subsampling when
// features_per_split < n_features.
DecisionTree train_tree(const Dataset& data, const TrainParams& params, SplitMix64& rng);

Model train_forest(const Dataset& data, const TrainParams& params);

// Single unbagged tree on all features (ModelKind::Tree).
Model train_single_tree(const Dataset& data, const TrainParams& params);

Model train_model(ModelKind kind, const Dataset& data, const TrainParams& params);

struct EvalResult {
    double accuracy = 0.0;
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> confusion{};  // [true][pred]
};

EvalResult evaluate(const Model& model, const Dataset& data);

// Model envelope, little-endian:
//   "POSM" | format u16=1 | kind u8 | model_version u32 | n_trees u32 |
//   per tree: n_nodes u32, then n_nodes 30-byte records
//   { flag u8, feature u8, threshold f64, left u32, right u32, counts 3xu32 }.
// Internal nodes zero-fill counts; leaves zero-fill feature/threshold/links.
inline constexpr std::uint16_t kEnvelopeFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const Model& model, std::uint32_t model_version);

struct DeserializedModel {
    Model model;
    std::uint32_t version = 0;
};

DeserializedModel deserialize_model(std::span<const std::uint8_t> bytes);

}  // namespace posmac
