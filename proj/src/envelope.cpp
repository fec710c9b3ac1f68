#include <cstring>

#include "posmac/errors.hpp"
#include "posmac/forest.hpp"

namespace posmac {

namespace {

constexpr std::size_t kNodeRecordLen = 30;
constexpr char kMagic[4] = {'P', 'O', 'S', 'M'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}
void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
}

struct Reader {
    std::span<const std::uint8_t> bytes;
    std::size_t off = 0;

    void need(std::size_t n) const {
        if (off + n > bytes.size()) throw CorruptNodeTable("envelope: truncated");
    }
    std::uint8_t u8() {
        need(1);
        return bytes[off++];
    }
    std::uint16_t u16() {
        need(2);
        const std::uint16_t v = static_cast<std::uint16_t>(bytes[off] | (bytes[off + 1] << 8));
        off += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        const std::uint32_t v = static_cast<std::uint32_t>(bytes[off]) |
                                (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
                                (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
                                (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
        off += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[off + i]) << (8 * i);
        off += 8;
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
};

void validate_tree(const DecisionTree& tree) {
    const auto n = static_cast<std::uint32_t>(tree.nodes.size());
    std::vector<char> reachable(n, 0);
    reachable[0] = 1;
    for (std::uint32_t i = 0; i < n; ++i) {
        const TreeNode& node = tree.nodes[i];
        if (node.is_leaf) {
            if (node.counts[0] == 0 && node.counts[1] == 0 && node.counts[2] == 0)
                throw CorruptNodeTable("envelope: leaf with all-zero counts");
            continue;
        }
        if (node.feature >= kNumFeatures)
            throw CorruptNodeTable("envelope: feature index out of range");
        // children strictly below their parent in the array: no cycles
        if (node.left <= i || node.right <= i || node.left >= n || node.right >= n)
            throw CorruptNodeTable("envelope: child index out of range");
        if (reachable[i]) {
            reachable[node.left] = 1;
            reachable[node.right] = 1;
        }
    }
    for (std::uint32_t i = 0; i < n; ++i)
        if (!reachable[i]) throw CorruptNodeTable("envelope: unreachable node");
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const Model& model, std::uint32_t model_version) {
    if (model.trees.empty()) throw Error("serialize: model has no trees");
    if (model.kind == ModelKind::Tree && model.trees.size() != 1)
        throw Error("serialize: tree model must have exactly one tree");

    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u16(out, kEnvelopeFormatVersion);
    out.push_back(static_cast<std::uint8_t>(model.kind));
    put_u32(out, model_version);
    put_u32(out, static_cast<std::uint32_t>(model.trees.size()));

    for (const DecisionTree& tree : model.trees) {
        put_u32(out, static_cast<std::uint32_t>(tree.nodes.size()));
        for (const TreeNode& node : tree.nodes) {
            out.push_back(node.is_leaf);
            if (node.is_leaf) {
                out.push_back(0);
                put_f64(out, 0.0);
                put_u32(out, 0);
                put_u32(out, 0);
                for (std::uint32_t c : node.counts) put_u32(out, c);
            } else {
                out.push_back(node.feature);
                put_f64(out, node.threshold);
                put_u32(out, node.left);
                put_u32(out, node.right);
                for (int c = 0; c < kNumClasses; ++c) put_u32(out, 0);
            }
        }
    }
    return out;
}

DeserializedModel deserialize_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw BadMagic("envelope: bad magic");
    Reader rd{bytes, 4};

    const std::uint16_t format = rd.u16();
    if (format != kEnvelopeFormatVersion)
        throw UnsupportedFormatVersion("envelope: format version " + std::to_string(format));
    const std::uint8_t kind_byte = rd.u8();
    if (kind_byte > 1) throw CorruptNodeTable("envelope: unknown model kind");

    DeserializedModel result;
    result.model.kind = static_cast<ModelKind>(kind_byte);
    result.version = rd.u32();

    const std::uint32_t n_trees = rd.u32();
    if (n_trees < 1) throw CorruptNodeTable("envelope: zero trees");
    if (result.model.kind == ModelKind::Tree && n_trees != 1)
        throw CorruptNodeTable("envelope: tree model with multiple trees");

    for (std::uint32_t t = 0; t < n_trees; ++t) {
        const std::uint32_t n_nodes = rd.u32();
        if (n_nodes < 1) throw CorruptNodeTable("envelope: empty node table");
        rd.need(static_cast<std::size_t>(n_nodes) * kNodeRecordLen);

        DecisionTree tree;
        tree.n_features = kNumFeatures;
        tree.nodes.reserve(n_nodes);
        for (std::uint32_t i = 0; i < n_nodes; ++i) {
            TreeNode node;
            node.is_leaf = rd.u8();
            if (node.is_leaf > 1) throw CorruptNodeTable("envelope: bad node flag");
            node.feature = rd.u8();
            node.threshold = rd.f64();
            node.left = rd.u32();
            node.right = rd.u32();
            for (int c = 0; c < kNumClasses; ++c) node.counts[c] = rd.u32();
            tree.nodes.push_back(node);
        }
        validate_tree(tree);
        result.model.trees.push_back(std::move(tree));
    }
    if (rd.off != bytes.size()) throw CorruptNodeTable("envelope: trailing bytes");
    return result;
}

}  // namespace posmac
