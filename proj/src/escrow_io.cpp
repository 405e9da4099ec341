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

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "escrow_internal.hpp"
#include "tescrow/errors.hpp"
#include "tescrow/escrow.hpp"
#include "tescrow/json_codec.hpp"

namespace tescrow {

using json_codec::json;

namespace {

constexpr char kMagic[4] = {'T', 'E', 'S', 'C'};
constexpr std::uint8_t kPackageVersion = 1;

enum Section : std::uint8_t {
    kSuite = 0x01,
    kGrid = 0x02,
    kNonce = 0x03,
    kSecret = 0x04,
    kCreatedAt = 0x05,
    kDeclaration = 0x06,
    kLeafTable = 0x07,
    kRoot = 0x08,
    kChecksum = 0x09,
};

const char* section_name(std::uint8_t tag) {
    switch (tag) {
        case kSuite: return "suite";
        case kGrid: return "grid";
        case kNonce: return "nonce";
        case kSecret: return "secret";
        case kCreatedAt: return "created_at";
        case kDeclaration: return "declaration";
        case kLeafTable: return "leaf_table";
        case kRoot: return "root";
        case kChecksum: return "checksum";
    }
    return "unknown";
}

void put_u32(Bytes& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (24 - 8 * k)));
}

void put_u64(Bytes& out, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (56 - 8 * k)));
}

std::uint64_t get_be(ByteView v) {
    std::uint64_t out = 0;
    for (std::uint8_t b : v) out = (out << 8) | b;
    return out;
}

void put_section(Bytes& out, std::uint8_t tag, ByteView value) {
    out.push_back(tag);
    put_u32(out, static_cast<std::uint32_t>(value.size()));
    out.insert(out.end(), value.begin(), value.end());
}

/// Fixed-width decimal rendering of value / 10^digits.
std::string fixed_decimal(std::int64_t value, int digits) {
    std::int64_t scale = 1;
    for (int k = 0; k < digits; ++k) scale *= 10;
    const bool negative = value < 0;
    const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-value)
                                       : static_cast<std::uint64_t>(value);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s%" PRIu64 ".%0*" PRIu64, negative ? "-" : "",
                  mag / static_cast<std::uint64_t>(scale), digits,
                  mag % static_cast<std::uint64_t>(scale));
    return buf;
}

Bytes encode_grid(const GridSpec& g) {
    Bytes out;
    for (double deg : {g.lat_min_deg, g.lat_max_deg, g.lon_min_deg, g.lon_max_deg}) {
        put_u64(out, static_cast<std::uint64_t>(std::llround(deg * 1e6)));
    }
    put_u32(out, g.resolution_minutes);
    out.push_back(static_cast<std::uint8_t>(g.i_bits));
    out.push_back(static_cast<std::uint8_t>(g.j_bits));
    return out;
}

GridSpec decode_grid(ByteView v) {
    if (v.size() != 4 * 8 + 4 + 2) throw IntegrityError("grid", "grid section has wrong size");
    GridSpec g;
    double* fields[] = {&g.lat_min_deg, &g.lat_max_deg, &g.lon_min_deg, &g.lon_max_deg};
    for (int k = 0; k < 4; ++k) {
        const auto micro = static_cast<std::int64_t>(get_be(v.subspan(8 * k, 8)));
        *fields[k] = static_cast<double>(micro) / 1e6;
    }
    g.resolution_minutes = static_cast<std::uint32_t>(get_be(v.subspan(32, 4)));
    g.i_bits = v[36];
    g.j_bits = v[37];
    try {
        g.validate();
    } catch (const InvalidKey& e) {
        throw IntegrityError("grid", e.what());
    }
    return g;
}

Bytes32 to_bytes32(ByteView v, const char* field) {
    if (v.size() != 32) throw IntegrityError(field, std::string(field) + " must be 32 bytes");
    Bytes32 out;
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Declaration

Declaration parse_declaration(std::string_view json_text) {
    const json doc = json_codec::parse(json_text);
    if (!doc.is_object()) throw FormatError("declaration must be a JSON object");
    Declaration decl;
    if (doc.contains("declarer")) decl.declarer = json_codec::require_string(doc, "declarer");
    if (doc.contains("date")) decl.date = json_codec::require_string(doc, "date");
    const json& sites = json_codec::require(doc, "sites");
    if (!sites.is_array()) throw FormatError("'sites' must be an array");
    decl.sites.reserve(sites.size());
    for (std::size_t n = 0; n < sites.size(); ++n) {
        const json& s = sites[n];
        try {
            SiteRecord rec;
            const json& lat = json_codec::require(s, "lat");
            const json& lon = json_codec::require(s, "lon");
            if (!lat.is_number() || !lon.is_number()) throw FormatError("lat/lon must be numbers");
            rec.location = GeoPoint::from_degrees(lat.get<double>(), lon.get<double>());
            rec.facility_type = json_codec::require_string(s, "facility_type");
            rec.status = json_codec::require_string(s, "status");
            rec.level1 = json_codec::payload_from_json(s);
            decl.sites.push_back(std::move(rec));
        } catch (const Error& e) {
            throw FormatError("site " + std::to_string(n) + ": " + e.what());
        }
    }
    return decl;
}

std::string declaration_to_json(const Declaration& decl) {
    std::ostringstream os;
    os << "{\n  \"declarer\": " << json(decl.declarer).dump()
       << ",\n  \"date\": " << json(decl.date).dump() << ",\n  \"sites\": [";
    for (std::size_t n = 0; n < decl.sites.size(); ++n) {
        const SiteRecord& s = decl.sites[n];
        os << (n == 0 ? "\n" : ",\n") << "    {\"lat\": " << fixed_decimal(s.location.lat_micro, 6)
           << ", \"lon\": " << fixed_decimal(s.location.lon_micro, 6)
           << ", \"facility_type\": " << json(s.facility_type).dump()
           << ", \"status\": " << json(s.status).dump()
           << ", \"warheads\": " << s.level1.warhead_count
           << ", \"missiles\": " << s.level1.missile_count
           << ", \"uranium_kg\": " << fixed_decimal(static_cast<std::int64_t>(s.level1.uranium_g), 3)
           << ", \"plutonium_kg\": "
           << fixed_decimal(static_cast<std::int64_t>(s.level1.plutonium_g), 3)
           << ", \"isotopics\": [";
        for (std::size_t k = 0; k < s.level1.isotopics.size(); ++k) {
            const auto& iso = s.level1.isotopics[k];
            os << (k == 0 ? "" : ", ") << "{\"nuclide\": " << json(iso.nuclide).dump()
               << ", \"wt_pct\": " << fixed_decimal(iso.centi_percent, 2) << "}";
        }
        os << "], \"free_text\": " << json(s.level1.free_text).dump() << "}";
    }
    os << (decl.sites.empty() ? "]\n}\n" : "\n  ]\n}\n");
    return os.str();
}

// ---------------------------------------------------------------------------
// Commitment, proof, revelation

std::string commitment_to_json(const PublicCommitment& pc) {
    return json_codec::commitment_to_json(pc).dump() + "\n";
}

PublicCommitment parse_commitment(std::string_view text) {
    return json_codec::commitment_from_json(json_codec::parse(text));
}

std::string proof_to_json(const MerkleProof& proof) {
    return json_codec::proof_to_json(proof).dump(2) + "\n";
}

MerkleProof parse_proof(std::string_view text, const GridSpec& grid) {
    return json_codec::proof_from_json(json_codec::parse(text), grid);
}

std::string revelation_to_json(const Revelation& rev) {
    return json_codec::revelation_to_json(rev).dump(2) + "\n";
}

Revelation parse_revelation(std::string_view text, const GridSpec& grid) {
    return json_codec::revelation_from_json(json_codec::parse(text), grid);
}

// ---------------------------------------------------------------------------
// Package container

Bytes serialize_package(const EscrowPackage& pkg) {
    Bytes out(std::begin(kMagic), std::end(kMagic));
    out.push_back(kPackageVersion);
    put_section(out, kSuite, as_bytes(pkg.suite().name()));
    put_section(out, kGrid, encode_grid(pkg.grid()));
    put_section(out, kNonce, pkg.inspector_nonce());
    put_section(out, kSecret, pkg.master_secret());
    put_section(out, kCreatedAt, as_bytes(pkg.created_at()));
    put_section(out, kDeclaration, as_bytes(declaration_to_json(pkg.declaration())));

    Bytes table;
    put_u32(table, static_cast<std::uint32_t>(pkg.declaration().sites.size()));
    for (const SiteRecord& s : pkg.declaration().sites) {
        const GridKey key = coord_to_key(s.location, pkg.grid());
        put_u32(table, static_cast<std::uint32_t>(key.leaf_index()));
        ByteView leaf = pkg.tree().node_bytes(0, key.leaf_index());
        table.insert(table.end(), leaf.begin(), leaf.end());
    }
    put_section(out, kLeafTable, table);
    put_section(out, kRoot, pkg.root().bytes);

    Bytes checksum(pkg.suite().output_length());
    pkg.suite().hash_into(out, checksum);
    put_section(out, kChecksum, checksum);
    return out;
}

EscrowPackage deserialize_package(ByteView bytes) {
    if (bytes.size() < 5 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        throw IntegrityError("magic", "not an escrow package (bad magic bytes)");
    }
    if (bytes[4] != kPackageVersion) {
        throw IntegrityError("format_version",
                             "unsupported package format version " + std::to_string(bytes[4]));
    }
    std::size_t pos = 5;
    std::size_t checksum_start = 0;
    const auto next = [&](std::uint8_t tag) {
        if (tag == kChecksum) checksum_start = pos;
        if (bytes.size() - pos < 5 || bytes[pos] != tag) {
            throw IntegrityError(section_name(tag), std::string("missing or misplaced section '") +
                                                        section_name(tag) + "'");
        }
        const std::uint64_t len = get_be(bytes.subspan(pos + 1, 4));
        pos += 5;
        if (bytes.size() - pos < len) {
            throw IntegrityError(section_name(tag),
                                 std::string("section '") + section_name(tag) + "' is truncated");
        }
        ByteView v = bytes.subspan(pos, len);
        pos += len;
        return v;
    };

    const ByteView suite_name = next(kSuite);
    const std::optional<HashSuite> suite = [&]() -> std::optional<HashSuite> {
        try {
            return parse_suite(std::string(suite_name.begin(), suite_name.end()));
        } catch (const SuiteError& e) {
            throw IntegrityError("suite", e.what());
        }
    }();
    const GridSpec grid = decode_grid(next(kGrid));
    const Bytes32 nonce = to_bytes32(next(kNonce), "nonce");
    const Bytes32 secret = to_bytes32(next(kSecret), "secret");
    const ByteView created = next(kCreatedAt);
    const ByteView decl_bytes = next(kDeclaration);
    const ByteView table = next(kLeafTable);
    const ByteView root = next(kRoot);
    const ByteView checksum = next(kChecksum);
    if (pos != bytes.size()) throw IntegrityError("trailer", "trailing bytes after checksum");

    Declaration decl;
    try {
        decl = parse_declaration(std::string_view(reinterpret_cast<const char*>(decl_bytes.data()),
                                                  decl_bytes.size()));
    } catch (const FormatError& e) {
        throw IntegrityError("declaration", e.what());
    }
    std::optional<EscrowPackage> pkg;
    try {
        pkg.emplace(EscrowBuilder::build(std::move(decl), nonce, *suite, grid, secret,
                                         std::string(created.begin(), created.end())));
    } catch (const Error& e) {
        throw IntegrityError("declaration", e.what());
    }

    const std::size_t len = suite->output_length();
    const std::size_t sites = pkg->declaration().sites.size();
    if (table.size() != 4 + sites * (4 + len) || get_be(table.first(4)) != sites) {
        throw IntegrityError("leaf_table", "leaf table does not match the declaration");
    }
    for (std::size_t n = 0; n < sites; ++n) {
        ByteView entry = table.subspan(4 + n * (4 + len), 4 + len);
        const GridKey key = coord_to_key(pkg->declaration().sites[n].location, grid);
        ByteView stored_leaf = entry.subspan(4);
        ByteView rebuilt = pkg->tree().node_bytes(0, key.leaf_index());
        if (get_be(entry.first(4)) != key.leaf_index() ||
            !std::equal(stored_leaf.begin(), stored_leaf.end(), rebuilt.begin(), rebuilt.end())) {
            throw IntegrityError("leaf " + key.bits(),
                                 "stored leaf " + key.bits() + " (site " + std::to_string(n) +
                                     ") does not match its recomputed commitment");
        }
    }
    if (!std::equal(root.begin(), root.end(), pkg->root().bytes.begin(), pkg->root().bytes.end())) {
        throw IntegrityError("root", "stored root does not match the recomputed Merkle root");
    }
    Bytes expected(len);
    suite->hash_into(bytes.first(checksum_start), expected);
    if (!std::equal(checksum.begin(), checksum.end(), expected.begin(), expected.end())) {
        throw IntegrityError("checksum", "package checksum mismatch");
    }
    return std::move(*pkg);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("write failed for " + path.string());
}

void save_package(const EscrowPackage& package, const std::filesystem::path& path) {
    const Bytes bytes = serialize_package(package);
    write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

EscrowPackage load_package(const std::filesystem::path& path) {
    const std::string raw = read_text_file(path);
    return deserialize_package(as_bytes(raw));
}

void save_commitment(const PublicCommitment& commitment, const std::filesystem::path& path) {
    write_text_file(path, commitment_to_json(commitment));
}

PublicCommitment load_commitment(const std::filesystem::path& path) {
    return parse_commitment(read_text_file(path));
}

}  // namespace tescrow
