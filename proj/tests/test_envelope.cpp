#include <doctest.h>

#include <cstring>

#include "posmac/errors.hpp"
#include "posmac/forest.hpp"
#include "posmac/rng.hpp"

using namespace posmac;

namespace {

Model random_forest_model(SplitMix64& rng, std::uint32_t n_trees = 5) {
    Dataset data(8);
    std::vector<double> row(8);
    for (int i = 0; i < 120; ++i) {
        for (auto& x : row) x = rng.uniform01() * 50;
        data.add_row(row, *label_from_code(static_cast<std::uint8_t>(rng.below(3))));
    }
    TrainParams params;
    params.n_trees = n_trees;
    params.seed = rng.next();
    return train_forest(data, params);
}

}  // namespace

TEST_SUITE("envelope") {

TEST_CASE("hand-encoded single-leaf envelope matches byte for byte") {
    Model m;
    m.kind = ModelKind::Tree;
    DecisionTree t;
    TreeNode leaf;
    leaf.is_leaf = 1;
    leaf.counts = {3, 1, 0};
    t.nodes.push_back(leaf);
    m.trees.push_back(t);

    const auto bytes = serialize_model(m, 7);

    // expected image per the format: header 15 bytes + n_nodes u32 + 30-byte node
    std::vector<std::uint8_t> want;
    want.insert(want.end(), {'P', 'O', 'S', 'M'});
    want.insert(want.end(), {1, 0});           // format_version u16 = 1
    want.push_back(0);                         // kind = DT
    want.insert(want.end(), {7, 0, 0, 0});     // model_version u32 = 7
    want.insert(want.end(), {1, 0, 0, 0});     // n_trees u32 = 1
    want.insert(want.end(), {1, 0, 0, 0});     // n_nodes u32 = 1
    want.push_back(1);                         // flag = leaf
    want.push_back(0);                         // feature
    for (int i = 0; i < 8; ++i) want.push_back(0);  // threshold f64 = 0.0
    want.insert(want.end(), {0, 0, 0, 0});     // left
    want.insert(want.end(), {0, 0, 0, 0});     // right
    want.insert(want.end(), {3, 0, 0, 0});     // counts[0] = 3
    want.insert(want.end(), {1, 0, 0, 0});     // counts[1] = 1
    want.insert(want.end(), {0, 0, 0, 0});     // counts[2] = 0

    CHECK(bytes.size() == 49);
    CHECK(bytes == want);

    const auto back = deserialize_model(bytes);
    CHECK(back.version == 7);
    CHECK(back.model.kind == ModelKind::Tree);
    REQUIRE(back.model.trees.size() == 1);
    CHECK(back.model.trees[0].nodes == t.nodes);
}

TEST_CASE("round trip: identical predictions and canonical bytes") {
    SplitMix64 rng(100);
    for (int iter = 0; iter < 10; ++iter) {
        const Model m = random_forest_model(rng);
        const auto bytes = serialize_model(m, 42);
        const auto back = deserialize_model(bytes);
        CHECK(back.version == 42);

        for (int i = 0; i < 1000; ++i) {
            std::array<double, 8> x;
            for (auto& v : x) v = rng.uniform01() * 60 - 5;
            const auto a = m.predict(x);
            const auto b = back.model.predict(x);
            CHECK(a.label == b.label);
            CHECK(a.confidence == doctest::Approx(b.confidence));
        }

        // serialize . deserialize . serialize == serialize
        CHECK(serialize_model(back.model, 42) == bytes);
    }
}

TEST_CASE("bad magic") {
    std::vector<std::uint8_t> bytes = {'X', 'X', 'X', 'X', 1, 0, 0};
    CHECK_THROWS_AS(deserialize_model(bytes), BadMagic);
    bytes.clear();
    CHECK_THROWS_AS(deserialize_model(bytes), BadMagic);
}

TEST_CASE("unsupported format version") {
    SplitMix64 rng(3);
    auto bytes = serialize_model(random_forest_model(rng, 1), 1);
    bytes[4] = 9;  // format_version
    CHECK_THROWS_AS(deserialize_model(bytes), UnsupportedFormatVersion);
}

TEST_CASE("corrupt node tables are rejected") {
    SplitMix64 rng(4);
    const Model m = random_forest_model(rng, 1);
    const auto good = serialize_model(m, 1);

    SUBCASE("truncated mid-node") {
        auto bytes = good;
        bytes.resize(bytes.size() - 5);
        CHECK_THROWS_AS(deserialize_model(bytes), CorruptNodeTable);
    }
    SUBCASE("trailing garbage") {
        auto bytes = good;
        bytes.push_back(0);
        CHECK_THROWS_AS(deserialize_model(bytes), CorruptNodeTable);
    }
    SUBCASE("child index out of range") {
        auto bytes = good;
        REQUIRE(m.trees[0].nodes.size() > 1);  // trained tree has internals
        // first node record begins at 15 + 4; left at offset +10
        const std::size_t node0 = 15 + 4;
        REQUIRE(bytes[node0] == 0);  // internal
        const std::uint32_t huge = 0xFFFFFF;
        std::memcpy(&bytes[node0 + 10], &huge, 4);
        CHECK_THROWS_AS(deserialize_model(bytes), CorruptNodeTable);
    }
    SUBCASE("self-referencing child (cycle)") {
        auto bytes = good;
        const std::size_t node0 = 15 + 4;
        REQUIRE(bytes[node0] == 0);
        const std::uint32_t zero = 0;
        std::memcpy(&bytes[node0 + 10], &zero, 4);
        CHECK_THROWS_AS(deserialize_model(bytes), CorruptNodeTable);
    }
    SUBCASE("bad kind byte") {
        auto bytes = good;
        bytes[6] = 7;
        CHECK_THROWS_AS(deserialize_model(bytes), CorruptNodeTable);
    }
    SUBCASE("leaf with all-zero counts") {
        Model leafy;
        leafy.kind = ModelKind::Tree;
        DecisionTree t;
        TreeNode leaf;
        leaf.is_leaf = 1;
        leaf.counts = {1, 0, 0};
        t.nodes.push_back(leaf);
        leafy.trees.push_back(t);
        auto bytes = serialize_model(leafy, 1);
        // zero the count at node offset +18
        bytes[15 + 4 + 18] = 0;
        CHECK_THROWS_AS(deserialize_model(bytes), CorruptNodeTable);
    }
}

TEST_CASE("dt envelope with several trees is rejected") {
    SplitMix64 rng(5);
    const Model m = random_forest_model(rng, 2);
    auto bytes = serialize_model(m, 1);
    bytes[6] = 0;  // claim DT
    CHECK_THROWS_AS(deserialize_model(bytes), CorruptNodeTable);
}

}  // TEST_SUITE
