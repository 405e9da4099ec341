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
/// \brief Named hash primitives and the concatenation combiner.
///
/// A suite is either a single primitive or the in-order concatenation of
/// 2..4 distinct primitives. Concatenation stays collision resistant as long
/// as any one component is, which is what lets each party nominate a hash it
/// trusts. Every primitive produces 32 bytes; a suite of n components
/// produces 32*n bytes.
///
/// Canonical suite names: `sha2-256`, `sha3-256`, `concat(sha2-256,sha3-256)`.
/// Lowercase, no whitespace. They appear verbatim in file headers.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tescrow/bytes.hpp"

namespace tescrow {

enum class HashAlgorithmId { kSha2_256, kSha3_256 };

enum class CombineMode { kSingle, kConcat };

inline constexpr std::size_t kPrimitiveDigestLength = 32;
inline constexpr std::size_t kMaxSuiteComponents = 4;

/// A named deterministic function bytes -> 32-byte digest.
struct HashPrimitive {
    using Fn = std::function<void(ByteView message,
                                  std::span<std::uint8_t, kPrimitiveDigestLength> out)>;
    std::string name;
    Fn fn;
};

std::string_view algorithm_name(HashAlgorithmId id);
HashAlgorithmId parse_algorithm(std::string_view name);
std::span<const HashAlgorithmId> registered_algorithms();
HashPrimitive builtin_primitive(HashAlgorithmId id);

/// Fixed-length digest tagged with the canonical name of its suite.
struct Digest {
    Bytes bytes;
    std::string suite_id;

    std::string hex() const { return to_hex(bytes); }
    bool operator==(const Digest&) const = default;
};

class HashSuite {
  public:
    const std::string& name() const noexcept { return name_; }
    CombineMode mode() const noexcept { return mode_; }
    std::size_t output_length() const noexcept {
        return components_.size() * kPrimitiveDigestLength;
    }
    const std::vector<HashPrimitive>& components() const noexcept { return components_; }

    /// Writes the suite digest of `message` into `out`, which must be exactly
    /// output_length() bytes.
    void hash_into(ByteView message, std::span<std::uint8_t> out) const;

    Digest digest(ByteView message) const;

  private:
    friend HashSuite make_suite(std::vector<HashPrimitive> components, CombineMode mode);

    HashSuite(std::string name, CombineMode mode, std::vector<HashPrimitive> components)
        : name_(std::move(name)), mode_(mode), components_(std::move(components)) {}

    std::string name_;
    CombineMode mode_;
    std::vector<HashPrimitive> components_;
};

/// Throws SuiteError on an empty list, a duplicate component under
/// kConcat, or a mode/arity mismatch.
HashSuite make_suite(const std::vector<HashAlgorithmId>& components, CombineMode mode);

/// Same contract over arbitrary primitives; duplicates are detected by name.
/// Used to plug in test doubles.
HashSuite make_suite(std::vector<HashPrimitive> components, CombineMode mode);

/// Inverse of HashSuite::name() for the built-in registry.
HashSuite parse_suite(std::string_view name);

inline Digest digest(const HashSuite& suite, ByteView message) {
    return suite.digest(message);
}

}  // namespace tescrow
