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

/// \file
/// \brief Fully materialized fixed-depth binary Merkle tree.
///
/// Internal nodes are digest(suite, 0x01 || left || right). Level 0 holds the
/// leaves, level `depth` holds the root. Leaf index n is reached from the
/// root by reading n's bits MSB-first, 0 going left.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tescrow/bytes.hpp"
#include "tescrow/grid.hpp"
#include "tescrow/hash_suite.hpp"

namespace tescrow {

inline constexpr std::uint32_t kTreeDepth = 18;

class MerkleTree {
  public:
    std::uint32_t depth() const noexcept { return depth_; }
    const std::string& suite_id() const noexcept { return suite_id_; }
    std::size_t digest_length() const noexcept { return digest_length_; }
    std::uint64_t leaf_count() const noexcept { return std::uint64_t{1} << depth_; }

    Digest root() const { return node(depth_, 0); }
    /// level 0 = leaves. Throws InvalidKey when out of range.
    Digest node(std::uint32_t level, std::uint64_t index) const;
    ByteView node_bytes(std::uint32_t level, std::uint64_t index) const;

  private:
    friend MerkleTree build_tree(const HashSuite& suite, Bytes leaf_bytes, std::uint32_t depth);

    std::uint32_t depth_ = 0;
    std::string suite_id_;
    std::size_t digest_length_ = 0;
    std::vector<Bytes> levels_;  // levels_[d] holds 2^(depth-d) digests back to back
};

/// Builds over `leaf_bytes`, the 2^depth leaf digests concatenated. Each
/// internal node costs exactly one suite evaluation, 2^depth - 1 in total.
MerkleTree build_tree(const HashSuite& suite, Bytes leaf_bytes, std::uint32_t depth);

/// Leaf count must be a power of two and every digest must come from `suite`.
MerkleTree build_tree(const HashSuite& suite, std::span<const Digest> leaves);

struct MerkleProof {
    GridKey key;
    Digest leaf_digest;
    std::vector<Digest> siblings;  // leaf-adjacent first
    std::string suite_id;

    std::size_t sibling_bytes() const;
    bool operator==(const MerkleProof&) const = default;
};

/// key.depth() must equal the tree depth.
MerkleProof prove(const MerkleTree& tree, const GridKey& key);

/// Folds the leaf up through the siblings, taking the current node as the
/// left child when the key bit at that depth is 0. Malformed proofs return
/// false.
bool verify_proof(const Digest& root, const MerkleProof& proof, const HashSuite& suite);

Digest hash_children(const HashSuite& suite, ByteView left, ByteView right);

/// Naive recursive recomputation of the root, for cross-checking build_tree.
/// At most 2^10 leaves, count a power of two.
Digest oracle_root(const HashSuite& suite, std::span<const Digest> leaves);

}  // namespace tescrow
