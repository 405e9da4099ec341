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

#include "tescrow/escrow.hpp"

#include <algorithm>

#include "escrow_internal.hpp"
#include "tescrow/errors.hpp"

namespace tescrow {

namespace {

Bytes with_prefix(std::uint8_t tag, const Bytes& body) {
    Bytes msg;
    msg.reserve(body.size() + 1);
    msg.push_back(tag);
    msg.insert(msg.end(), body.begin(), body.end());
    return msg;
}

Level0Preimage present_level0(const SiteRecord& site, const GridKey& key, const Bytes32& salt0,
                              const Bytes32& nonce, const Digest& level1_digest) {
    Level0Preimage p;
    p.salt0 = salt0;
    p.inspector_nonce = nonce;
    p.presence = Presence::kPresent;
    p.facility_type = site.facility_type;
    p.coordinates = GridOffset{static_cast<std::int32_t>(key.i), static_cast<std::int32_t>(key.j)};
    p.status = site.status;
    p.level1_digest = level1_digest.bytes;
    return p;
}

bool all_zero(const Bytes& b) {
    return std::all_of(b.begin(), b.end(), [](std::uint8_t v) { return v == 0; });
}

}  // namespace

EscrowPackage::EscrowPackage(Declaration declaration, Bytes32 master_secret,
                             Bytes32 inspector_nonce, HashSuite suite, GridSpec grid,
                             std::string created_at)
    : declaration_(std::move(declaration)),
      master_secret_(master_secret),
      inspector_nonce_(inspector_nonce),
      suite_(std::move(suite)),
      grid_(grid),
      created_at_(std::move(created_at)) {}

PublicCommitment EscrowPackage::commitment() const {
    PublicCommitment pc;
    pc.root = root_;
    pc.suite = suite_.name();
    pc.grid = grid_;
    pc.inspector_nonce = inspector_nonce_;
    pc.created_at = created_at_;
    return pc;
}

std::optional<std::size_t> EscrowPackage::site_at(const GridKey& key) const {
    if (key.depth() != grid_.depth()) return std::nullopt;
    const auto it = site_by_leaf_.find(key.leaf_index());
    if (it == site_by_leaf_.end()) return std::nullopt;
    return it->second;
}

Level0Preimage EscrowPackage::level0_at(const GridKey& key) const {
    const auto [salt0, salt1] = derive_salts(master_secret_, key, suite_);
    const auto site = site_at(key);
    if (!site) return make_absent_level0(salt0, inspector_nonce_, suite_);
    const SiteRecord& rec = declaration_.sites[*site];
    const Level1Preimage l1{salt1, rec.level1};
    return present_level0(rec, key, salt0, inspector_nonce_, commit_level1(suite_, l1));
}

std::optional<Level1Preimage> EscrowPackage::level1_at(const GridKey& key) const {
    const auto site = site_at(key);
    if (!site) return std::nullopt;
    const auto salts = derive_salts(master_secret_, key, suite_);
    return Level1Preimage{salts.second, declaration_.sites[*site].level1};
}

EscrowPackage EscrowBuilder::build(Declaration declaration, const Bytes32& inspector_nonce,
                                   const HashSuite& suite, const GridSpec& grid,
                                   const Bytes32& master_secret, std::string created_at) {
    grid.validate();
    if (declaration.sites.size() > grid_point_count(grid)) {
        throw DeclarationError("more sites than grid points");
    }
    EscrowPackage pkg(std::move(declaration), master_secret, inspector_nonce, suite, grid,
                      std::move(created_at));

    const auto& sites = pkg.declaration_.sites;
    std::vector<GridKey> site_keys;
    site_keys.reserve(sites.size());
    for (std::size_t n = 0; n < sites.size(); ++n) {
        const SiteRecord& s = sites[n];
        const std::string where = "site " + std::to_string(n);
        try {
            validate_label("facility_type", s.facility_type);
            validate_label("status", s.status);
            validate_payload(s.level1);
        } catch (const EncodingError& e) {
            throw DeclarationError(where + ": " + e.what());
        }
        const GridKey key = coord_to_key(s.location, grid);
        if (!is_grid_aligned(s.location, grid)) {
            throw DeclarationError(where + ": coordinates (" + std::to_string(s.location.lat_deg()) +
                                   ", " + std::to_string(s.location.lon_deg()) +
                                   ") are not on the grid and would move under rounding");
        }
        if (!pkg.site_by_leaf_.emplace(key.leaf_index(), n).second) {
            throw DeclarationError(where + ": duplicate site key " + key.bits());
        }
        site_keys.push_back(key);
    }

    const std::size_t len = suite.output_length();
    const std::uint64_t leaves = grid.leaf_count();
    Bytes leaf_bytes(leaves * len);
    Bytes salt_msg{domain::kSalt0};
    salt_msg.insert(salt_msg.end(), master_secret.begin(), master_secret.end());
    const std::size_t x_offset = salt_msg.size();
    salt_msg.resize(x_offset + grid.depth());
    Bytes salt_out(len);
    Level0Preimage absent = make_absent_level0({}, inspector_nonce, suite);

    for (std::uint64_t index = 0; index < leaves; ++index) {
        auto out = std::span<std::uint8_t>(leaf_bytes).subspan(index * len, len);
        if (pkg.site_by_leaf_.contains(index)) continue;
        // Absent leaves only need salt0; inline derivation avoids
        // recomputing the unused salt1 for 2^depth leaves.
        for (std::uint32_t b = 0; b < grid.depth(); ++b) {
            salt_msg[x_offset + b] = ((index >> (grid.depth() - 1 - b)) & 1u) ? '1' : '0';
        }
        suite.hash_into(salt_msg, salt_out);
        std::copy_n(salt_out.begin(), 32, absent.salt0.begin());
        suite.hash_into(with_prefix(domain::kLeaf, encode_level0(absent)), out);
    }
    for (std::size_t n = 0; n < sites.size(); ++n) {
        const GridKey& key = site_keys[n];
        const auto [salt0, salt1] = derive_salts(master_secret, key, suite);
        const Digest l1 = commit_level1(suite, Level1Preimage{salt1, sites[n].level1});
        const Digest leaf =
            commit_leaf(suite, present_level0(sites[n], key, salt0, inspector_nonce, l1));
        std::copy(leaf.bytes.begin(), leaf.bytes.end(),
                  leaf_bytes.begin() + static_cast<std::ptrdiff_t>(key.leaf_index() * len));
    }

    pkg.tree_ = std::make_shared<const MerkleTree>(build_tree(suite, std::move(leaf_bytes),
                                                              grid.depth()));
    pkg.root_ = pkg.tree_->root();
    return pkg;
}

EscrowBuild build_escrow(const Declaration& declaration, const Bytes32& inspector_nonce,
                         const HashSuite& suite, const GridSpec& grid,
                         const Bytes32& master_secret, std::string created_at) {
    EscrowPackage pkg = EscrowBuilder::build(declaration, inspector_nonce, suite, grid,
                                             master_secret, std::move(created_at));
    PublicCommitment pc = pkg.commitment();
    return EscrowBuild{std::move(pkg), std::move(pc)};
}

EscrowBuild build_escrow(const Declaration& declaration, ByteView inspector_nonce,
                         const HashSuite& suite, const GridSpec& grid,
                         const Bytes32& master_secret, std::string created_at) {
    if (inspector_nonce.size() != 32) {
        throw DeclarationError("inspector nonce must be 32 bytes, got " +
                               std::to_string(inspector_nonce.size()));
    }
    Bytes32 nonce;
    std::copy(inspector_nonce.begin(), inspector_nonce.end(), nonce.begin());
    return build_escrow(declaration, nonce, suite, grid, master_secret, std::move(created_at));
}

std::string_view to_string(RevealLevel level) {
    return level == RevealLevel::kL0 ? "L0" : "L1";
}

std::string_view to_string(RevelationKind kind) {
    switch (kind) {
        case RevelationKind::kPresenceL0:
            return "PRESENCE_L0";
        case RevelationKind::kPresenceL1:
            return "PRESENCE_L1";
        case RevelationKind::kAbsence:
            return "ABSENCE";
    }
    return "?";
}

RevealLevel parse_reveal_level(std::string_view s) {
    if (s == "L0" || s == "l0" || s == "0") return RevealLevel::kL0;
    if (s == "L1" || s == "l1" || s == "1") return RevealLevel::kL1;
    throw FormatError("unknown reveal level '" + std::string(s) + "'");
}

RevelationKind parse_revelation_kind(std::string_view s) {
    for (auto k : {RevelationKind::kPresenceL0, RevelationKind::kPresenceL1,
                   RevelationKind::kAbsence}) {
        if (to_string(k) == s) return k;
    }
    throw FormatError("unknown revelation kind '" + std::string(s) + "'");
}

std::string_view to_string(VerifyStatus s) {
    switch (s) {
        case VerifyStatus::kOk:
            return "OK";
        case VerifyStatus::kBadPath:
            return "BAD_PATH";
        case VerifyStatus::kBadOpening:
            return "BAD_OPENING";
        case VerifyStatus::kNonceMismatch:
            return "NONCE_MISMATCH";
    }
    return "?";
}

Revelation reveal(const EscrowPackage& package, const GridKey& key, RevealLevel level) {
    if (!in_domain(key, package.grid())) {
        throw InvalidKey("key " + key.bits() + " is outside the grid");
    }
    if (!package.site_at(key)) {
        if (level == RevealLevel::kL1) {
            throw NotASite("no site declared at " + key.bits());
        }
        return prove_absence(package, key);
    }
    Revelation rev;
    rev.kind = level == RevealLevel::kL0 ? RevelationKind::kPresenceL0
                                         : RevelationKind::kPresenceL1;
    rev.level0 = package.level0_at(key);
    if (level == RevealLevel::kL1) rev.level1 = package.level1_at(key);
    rev.proof = prove(package.tree(), key);
    return rev;
}

Revelation prove_absence(const EscrowPackage& package, const GridKey& key) {
    if (key.i_bits != package.grid().i_bits || key.j_bits != package.grid().j_bits) {
        throw InvalidKey("key widths do not match the package grid");
    }
    if (package.site_at(key)) {
        throw IsASite("a site is declared at " + key.bits());
    }
    Revelation rev;
    rev.kind = RevelationKind::kAbsence;
    rev.level0 = package.level0_at(key);
    rev.proof = prove(package.tree(), key);
    return rev;
}

VerifyStatus verify_revelation(const PublicCommitment& commitment, const Revelation& rev) {
    std::optional<HashSuite> suite;
    try {
        suite.emplace(parse_suite(commitment.suite));
    } catch (const SuiteError&) {
        return VerifyStatus::kBadPath;
    }
    if (rev.level0.inspector_nonce != commitment.inspector_nonce) {
        return VerifyStatus::kNonceMismatch;
    }
    const GridKey& key = rev.proof.key;
    if (key.i_bits != commitment.grid.i_bits || key.j_bits != commitment.grid.j_bits ||
        !verify_proof(commitment.root, rev.proof, *suite)) {
        return VerifyStatus::kBadPath;
    }

    const Level0Preimage& l0 = rev.level0;
    if (rev.kind == RevelationKind::kAbsence) {
        if (l0.presence != Presence::kAbsent || rev.level1 || !l0.facility_type.empty() ||
            !l0.status.empty() || l0.coordinates ||
            l0.level1_digest.size() != suite->output_length() || !all_zero(l0.level1_digest)) {
            return VerifyStatus::kBadOpening;
        }
    } else {
        if (!l0.coordinates ||
            l0.coordinates->i != static_cast<std::int32_t>(key.i) ||
            l0.coordinates->j != static_cast<std::int32_t>(key.j)) {
            return VerifyStatus::kBadPath;
        }
        const bool wants_l1 = rev.kind == RevelationKind::kPresenceL1;
        if (l0.presence != Presence::kPresent || wants_l1 != rev.level1.has_value()) {
            return VerifyStatus::kBadOpening;
        }
    }
    const Level1Preimage* l1 = rev.level1 ? &*rev.level1 : nullptr;
    if (verify_opening(*suite, rev.proof.leaf_digest, l0, l1) != OpeningStatus::kOk) {
        return VerifyStatus::kBadOpening;
    }
    return VerifyStatus::kOk;
}

EscrowBuild rekey(const EscrowPackage& package, const HashSuite& new_suite,
                  const Bytes32& new_master_secret, std::optional<Bytes32> new_nonce,
                  std::string created_at) {
    EscrowBuild out = build_escrow(package.declaration(),
                                   new_nonce.value_or(package.inspector_nonce()), new_suite,
                                   package.grid(), new_master_secret, std::move(created_at));
    if (out.package.declaration() != package.declaration()) {
        throw IntegrityError("declaration", "rekeyed package declaration differs from original");
    }
    return out;
}

}  // namespace tescrow
