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
/// \brief Two-level leaf commitments and their canonical encoding.
///
/// Every grid leaf commits to a level-0 message: the host salt, the
/// inspector's freshness nonce, a presence flag, the clear-text site fields
/// and the digest of a level-1 message. The level-1 message carries the
/// inventory and its own salt, so it can be opened later than level 0.
///
/// Canonical encoding, format version 1:
///
///     version:u8  { tag:u8  length:u32be  value[length] }*
///
/// Fields appear in a fixed order with fixed tags; decoding rejects anything
/// else, including trailing bytes. Integers are big-endian. Masses are
/// encoded in grams and weight percentages in hundredths of a percent so no
/// floating-point value ever reaches the hash.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tescrow/bytes.hpp"
#include "tescrow/grid.hpp"
#include "tescrow/hash_suite.hpp"

namespace tescrow {

inline constexpr std::uint8_t kEncodingVersion = 1;

/// Domain-separation prefixes for every hash the escrow computes.
namespace domain {
inline constexpr std::uint8_t kLeaf = 0x00;
inline constexpr std::uint8_t kNode = 0x01;
inline constexpr std::uint8_t kLevel1 = 0x02;
inline constexpr std::uint8_t kSalt0 = 0x10;
inline constexpr std::uint8_t kSalt1 = 0x11;
inline constexpr std::uint8_t kSelect = 0x20;
}  // namespace domain

inline constexpr std::size_t kMaxLabelBytes = 64;
inline constexpr std::size_t kMaxFreeTextBytes = 4096;
inline constexpr std::size_t kMaxNuclideBytes = 32;
inline constexpr std::size_t kMaxIsotopics = 64;
inline constexpr std::uint16_t kMaxCentiPercent = 10000;

struct Isotopic {
    std::string nuclide;
    std::uint16_t centi_percent = 0;  // 9325 == 93.25 wt%

    bool operator==(const Isotopic&) const = default;
};

struct Level1Payload {
    std::uint64_t warhead_count = 0;
    std::uint64_t missile_count = 0;
    std::uint64_t uranium_g = 0;
    std::uint64_t plutonium_g = 0;
    std::vector<Isotopic> isotopics;
    std::string free_text;  // empty means none

    bool operator==(const Level1Payload&) const = default;
};

struct Level1Preimage {
    Bytes32 salt1{};
    Level1Payload payload;

    bool operator==(const Level1Preimage&) const = default;
};

enum class Presence : std::uint8_t { kAbsent = 0, kPresent = 1 };

/// Grid position as signed minute offsets from the origin.
struct GridOffset {
    std::int32_t i = 0;
    std::int32_t j = 0;

    bool operator==(const GridOffset&) const = default;
};

struct Level0Preimage {
    Bytes32 salt0{};
    Bytes32 inspector_nonce{};
    Presence presence = Presence::kAbsent;
    std::string facility_type;
    std::optional<GridOffset> coordinates;
    std::string status;
    Bytes level1_digest;  // all zero for absent leaves

    bool operator==(const Level0Preimage&) const = default;
};

/// One declared site as the declarer writes it down.
struct SiteRecord {
    GeoPoint location;
    std::string facility_type;
    std::string status;
    Level1Payload level1;

    bool operator==(const SiteRecord&) const = default;
};

/// Non-empty, at most 64 bytes, valid UTF-8. Throws EncodingError naming
/// `field` otherwise.
void validate_label(std::string_view field, std::string_view value);
void validate_payload(const Level1Payload& payload);
bool is_valid_utf8(std::string_view s);

/// Decimal kilograms (at most 3 fractional digits) to grams.
std::uint64_t kilograms_to_grams(double kg);
/// Weight percent in [0, 100] with at most 2 fractional digits.
std::uint16_t percent_to_centi(double pct);

Bytes encode_level0(const Level0Preimage& p);
Bytes encode_level1(const Level1Preimage& p);
Level0Preimage decode_level0(ByteView bytes);
Level1Preimage decode_level1(ByteView bytes);

/// Absent leaf: empty site fields and an all-zero level-1 digest of the
/// suite's output length.
Level0Preimage make_absent_level0(const Bytes32& salt0, const Bytes32& nonce,
                                  const HashSuite& suite);

/// digest(suite, 0x02 || encode_level1(p))
Digest commit_level1(const HashSuite& suite, const Level1Preimage& p);

/// digest(suite, 0x00 || encode_level0(p))
Digest commit_leaf(const HashSuite& suite, const Level0Preimage& p);

enum class OpeningStatus { kOk, kMismatchL0, kMismatchL1 };
std::string_view to_string(OpeningStatus s);

OpeningStatus verify_opening(const HashSuite& suite, const Digest& claimed_leaf_digest,
                             const Level0Preimage& level0,
                             const Level1Preimage* level1 = nullptr);

/// salt0 = first 32 bytes of digest(suite, 0x10 || master_secret || x),
/// salt1 likewise with 0x11, where x is the key as ASCII '0'/'1'.
std::pair<Bytes32, Bytes32> derive_salts(const Bytes32& master_secret, const GridKey& key,
                                         const HashSuite& suite);

}  // namespace tescrow
