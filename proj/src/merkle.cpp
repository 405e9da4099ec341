// Copyright 2026 The treaty-escrow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tescrow/merkle.hpp"

#include <bit>

#include "tescrow/commitments.hpp"
#include "tescrow/errors.hpp"

namespace tescrow {

Digest MerkleTree::node(std::uint32_t level, std::uint64_t index) const {
    ByteView b = node_bytes(level, index);
    return Digest{Bytes(b.begin(), b.end()), suite_id_};
}

ByteView MerkleTree::node_bytes(std::uint32_t level, std::uint64_t index) const {
    if (level > depth_ || index >= (std::uint64_t{1} << (depth_ - level))) {
        throw InvalidKey("tree node out of range");
    }
    return ByteView(levels_[level]).subspan(index * digest_length_, digest_length_);
}

MerkleTree build_tree(const HashSuite& suite, Bytes leaf_bytes, std::uint32_t depth) {
    const std::size_t len = suite.output_length();
    if (depth > 30) throw Error("tree depth above 30");
    if (leaf_bytes.size() != (std::size_t{1} << depth) * len) {
        throw Error("expected " + std::to_string(std::size_t{1} << depth) + " leaves of " +
                    std::to_string(len) + " bytes");
    }
    MerkleTree tree;
    tree.depth_ = depth;
    tree.suite_id_ = suite.name();
    tree.digest_length_ = len;
    tree.levels_.reserve(depth + 1);
    tree.levels_.push_back(std::move(leaf_bytes));

    Bytes msg(1 + 2 * len);
    msg[0] = domain::kNode;
    for (std::uint32_t d = 1; d <= depth; ++d) {
        const Bytes& below = tree.levels_[d - 1];
        const std::size_t count = below.size() / len / 2;
        Bytes level(count * len);
        for (std::size_t n = 0; n < count; ++n) {
            std::copy_n(below.begin() + static_cast<std::ptrdiff_t>(2 * n * len), 2 * len,
                        msg.begin() + 1);
            suite.hash_into(msg, std::span<std::uint8_t>(level).subspan(n * len, len));
        }
        tree.levels_.push_back(std::move(level));
    }
    return tree;
}

MerkleTree build_tree(const HashSuite& suite, std::span<const Digest> leaves) {
    if (leaves.empty() || !std::has_single_bit(leaves.size())) {
        throw Error("leaf count must be a power of two");
    }
    const std::size_t len = suite.output_length();
    Bytes flat;
    flat.reserve(leaves.size() * len);
    for (const auto& leaf : leaves) {
        if (leaf.bytes.size() != len || leaf.suite_id != suite.name()) {
            throw Error("leaf digest does not belong to suite " + suite.name());
        }
        flat.insert(flat.end(), leaf.bytes.begin(), leaf.bytes.end());
    }
    const auto depth = static_cast<std::uint32_t>(std::countr_zero(leaves.size()));
    return build_tree(suite, std::move(flat), depth);
}

std::size_t MerkleProof::sibling_bytes() const {
    std::size_t total = 0;
    for (const auto& s : siblings) total += s.bytes.size();
    return total;
}

MerkleProof prove(const MerkleTree& tree, const GridKey& key) {
    if (key.depth() != tree.depth()) {
        throw InvalidKey("key depth " + std::to_string(key.depth()) + " does not match tree depth " +
                         std::to_string(tree.depth()));
    }
    MerkleProof proof;
    proof.key = key;
    proof.suite_id = tree.suite_id();
    std::uint64_t index = key.leaf_index();
    proof.leaf_digest = tree.node(0, index);
    proof.siblings.reserve(tree.depth());
    for (std::uint32_t d = 0; d < tree.depth(); ++d) {
        proof.siblings.push_back(tree.node(d, index ^ 1u));
        index >>= 1;
    }
    return proof;
}

Digest hash_children(const HashSuite& suite, ByteView left, ByteView right) {
    Bytes msg;
    msg.reserve(1 + left.size() + right.size());
    msg.push_back(domain::kNode);
    msg.insert(msg.end(), left.begin(), left.end());
    msg.insert(msg.end(), right.begin(), right.end());
    return suite.digest(msg);
}

bool verify_proof(const Digest& root, const MerkleProof& proof, const HashSuite& suite) {
    const std::size_t len = suite.output_length();
    if (proof.suite_id != suite.name() || root.suite_id != suite.name() ||
        root.bytes.size() != len || proof.leaf_digest.bytes.size() != len ||
        proof.siblings.size() != proof.key.depth()) {
        return false;
    }
    std::uint64_t index = proof.key.leaf_index();
    Bytes node = proof.leaf_digest.bytes;
    for (const auto& sibling : proof.siblings) {
        if (sibling.bytes.size() != len) return false;
        node = (index & 1u) == 0 ? hash_children(suite, node, sibling.bytes).bytes
                                 : hash_children(suite, sibling.bytes, node).bytes;
        index >>= 1;
    }
    return node == root.bytes;
}

namespace {

Digest oracle_range(const HashSuite& suite, std::span<const Digest> leaves) {
    if (leaves.size() == 1) return leaves.front();
    const std::size_t half = leaves.size() / 2;
    const Digest left = oracle_range(suite, leaves.first(half));
    const Digest right = oracle_range(suite, leaves.subspan(half));
    Bytes msg{domain::kNode};
    msg.insert(msg.end(), left.bytes.begin(), left.bytes.end());
    msg.insert(msg.end(), right.bytes.begin(), right.bytes.end());
    return suite.digest(msg);
}

}  // namespace

Digest oracle_root(const HashSuite& suite, std::span<const Digest> leaves) {
    if (leaves.empty() || !std::has_single_bit(leaves.size()) || leaves.size() > 1024) {
        throw Error("oracle_root needs a power-of-two leaf count up to 1024");
    }
    return oracle_range(suite, leaves);
}

}  // namespace tescrow
