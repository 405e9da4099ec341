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
/// \brief The declarer's escrow: build, reveal, prove absence, verify, rekey.
///
/// Every one of the 2^depth leaves is committed, declared or not. Keys that
/// fit in the key widths but fall outside the grid are committed as absent,
/// so the tree is total. The package keeps the declaration plaintext and one
/// master secret; per-leaf salts are re-derived on demand.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tescrow/bytes.hpp"
#include "tescrow/commitments.hpp"
#include "tescrow/grid.hpp"
#include "tescrow/hash_suite.hpp"
#include "tescrow/merkle.hpp"

namespace tescrow {

inline constexpr std::uint32_t kFormatVersion = 1;

struct Declaration {
    std::vector<SiteRecord> sites;
    std::string declarer;
    std::string date;

    bool operator==(const Declaration&) const = default;
};

/// The only thing published up front.
struct PublicCommitment {
    std::uint32_t format_version = kFormatVersion;
    Digest root;
    std::string suite;
    GridSpec grid;
    Bytes32 inspector_nonce{};
    std::string created_at;

    bool operator==(const PublicCommitment&) const = default;
};

/// Private to the declarer. Immutable once built.
class EscrowPackage {
  public:
    const Declaration& declaration() const noexcept { return declaration_; }
    const Bytes32& master_secret() const noexcept { return master_secret_; }
    const Bytes32& inspector_nonce() const noexcept { return inspector_nonce_; }
    const HashSuite& suite() const noexcept { return suite_; }
    const GridSpec& grid() const noexcept { return grid_; }
    const Digest& root() const noexcept { return root_; }
    const std::string& created_at() const noexcept { return created_at_; }
    const MerkleTree& tree() const noexcept { return *tree_; }

    PublicCommitment commitment() const;

    /// Index into declaration().sites of the site at `key`, if any.
    std::optional<std::size_t> site_at(const GridKey& key) const;

    /// Rebuilds the level-0 / level-1 openings for a leaf.
    Level0Preimage level0_at(const GridKey& key) const;
    std::optional<Level1Preimage> level1_at(const GridKey& key) const;

  private:
    friend class EscrowBuilder;

    EscrowPackage(Declaration declaration, Bytes32 master_secret, Bytes32 inspector_nonce,
                  HashSuite suite, GridSpec grid, std::string created_at);

    Declaration declaration_;
    Bytes32 master_secret_;
    Bytes32 inspector_nonce_;
    HashSuite suite_;
    GridSpec grid_;
    std::string created_at_;
    Digest root_;
    std::shared_ptr<const MerkleTree> tree_;
    std::unordered_map<std::uint64_t, std::size_t> site_by_leaf_;
};

struct EscrowBuild {
    EscrowPackage package;
    PublicCommitment commitment;
};

/// Throws DeclarationError on duplicate site keys, coordinates that move
/// under rounding, or invalid labels/payloads; BoundsError for sites outside
/// the grid.
EscrowBuild build_escrow(const Declaration& declaration, const Bytes32& inspector_nonce,
                         const HashSuite& suite, const GridSpec& grid,
                         const Bytes32& master_secret, std::string created_at = {});

/// Nonce given as raw bytes; anything but 32 bytes is a DeclarationError.
EscrowBuild build_escrow(const Declaration& declaration, ByteView inspector_nonce,
                         const HashSuite& suite, const GridSpec& grid,
                         const Bytes32& master_secret, std::string created_at = {});

enum class RevealLevel { kL0, kL1 };
enum class RevelationKind { kPresenceL0, kPresenceL1, kAbsence };

std::string_view to_string(RevealLevel level);
std::string_view to_string(RevelationKind kind);
RevealLevel parse_reveal_level(std::string_view s);
RevelationKind parse_revelation_kind(std::string_view s);

struct Revelation {
    RevelationKind kind = RevelationKind::kAbsence;
    Level0Preimage level0;
    std::optional<Level1Preimage> level1;
    MerkleProof proof;

    bool operator==(const Revelation&) const = default;
};

/// L0 at a declared site gives PRESENCE_L0 (level-1 digest only); L1 adds the
/// level-1 plaintext. L0 at an undeclared leaf returns an absence
/// revelation. Throws NotASite for L1 at an undeclared leaf, InvalidKey for
/// keys outside the grid.
Revelation reveal(const EscrowPackage& package, const GridKey& key, RevealLevel level);

/// Accepts any key that fits in the key widths. Throws IsASite at a
/// declared site.
Revelation prove_absence(const EscrowPackage& package, const GridKey& key);

enum class VerifyStatus { kOk, kBadPath, kBadOpening, kNonceMismatch };
std::string_view to_string(VerifyStatus s);

/// Checks, in order: inspector nonce, authentication path against the root,
/// that the level-0 coordinates match the proof key, the revelation shape,
/// and the openings against the leaf digest.
VerifyStatus verify_revelation(const PublicCommitment& commitment, const Revelation& revelation);

/// Re-commits the same declaration under a new suite and secret, optionally
/// with a new inspector nonce.
EscrowBuild rekey(const EscrowPackage& package, const HashSuite& new_suite,
                  const Bytes32& new_master_secret, std::optional<Bytes32> new_nonce = {},
                  std::string created_at = {});

// ---------------------------------------------------------------------------
// Files

/// Declaration file: {"declarer", "date", "sites": [{lat, lon, facility_type,
/// status, warheads, missiles, uranium_kg, plutonium_kg, isotopics:
/// [{nuclide, wt_pct}], free_text}]}. Throws FormatError.
Declaration parse_declaration(std::string_view json_text);
/// Coordinates written with exactly 6 fractional digits.
std::string declaration_to_json(const Declaration& declaration);

/// Canonical single-line JSON, newline terminated.
std::string commitment_to_json(const PublicCommitment& commitment);
PublicCommitment parse_commitment(std::string_view json_text);

std::string proof_to_json(const MerkleProof& proof);
MerkleProof parse_proof(std::string_view json_text, const GridSpec& grid);

std::string revelation_to_json(const Revelation& revelation);
Revelation parse_revelation(std::string_view json_text, const GridSpec& grid);

/// Binary container: "TESC", version, then tagged sections (suite, grid,
/// nonce, secret, created_at, declaration, site leaf table, root, checksum).
Bytes serialize_package(const EscrowPackage& package);

/// Recomputes every leaf and the root. Throws IntegrityError naming the first
/// failing header field or leaf.
EscrowPackage deserialize_package(ByteView bytes);

void save_package(const EscrowPackage& package, const std::filesystem::path& path);
EscrowPackage load_package(const std::filesystem::path& path);
void save_commitment(const PublicCommitment& commitment, const std::filesystem::path& path);
PublicCommitment load_commitment(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace tescrow
