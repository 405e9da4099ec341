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

#include "tescrow/json_codec.hpp"

#include "tescrow/errors.hpp"

namespace tescrow::json_codec {

const json& require(const json& obj, const char* field) {
    if (!obj.is_object()) throw FormatError("expected a JSON object");
    const auto it = obj.find(field);
    if (it == obj.end()) throw FormatError(std::string("missing field '") + field + "'");
    return *it;
}

std::string require_string(const json& obj, const char* field) {
    const json& v = require(obj, field);
    if (!v.is_string()) throw FormatError(std::string("field '") + field + "' must be a string");
    return v.get<std::string>();
}

std::uint64_t require_uint(const json& obj, const char* field) {
    const json& v = require(obj, field);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw FormatError(std::string("field '") + field + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

namespace {

double require_number(const json& obj, const char* field) {
    const json& v = require(obj, field);
    if (!v.is_number()) throw FormatError(std::string("field '") + field + "' must be a number");
    return v.get<double>();
}

template <typename F>
auto wrap_encoding(F&& f) {
    try {
        return f();
    } catch (const EncodingError& e) {
        throw FormatError(e.what());
    }
}

}  // namespace

json grid_to_json(const GridSpec& g) {
    return json{{"lat_min_deg", g.lat_min_deg},           {"lat_max_deg", g.lat_max_deg},
                {"lon_min_deg", g.lon_min_deg},           {"lon_max_deg", g.lon_max_deg},
                {"resolution_minutes", g.resolution_minutes}, {"i_bits", g.i_bits},
                {"j_bits", g.j_bits}};
}

GridSpec grid_from_json(const json& j) {
    GridSpec g;
    g.lat_min_deg = require_number(j, "lat_min_deg");
    g.lat_max_deg = require_number(j, "lat_max_deg");
    g.lon_min_deg = require_number(j, "lon_min_deg");
    g.lon_max_deg = require_number(j, "lon_max_deg");
    g.resolution_minutes = static_cast<std::uint32_t>(require_uint(j, "resolution_minutes"));
    g.i_bits = static_cast<std::uint32_t>(require_uint(j, "i_bits"));
    g.j_bits = static_cast<std::uint32_t>(require_uint(j, "j_bits"));
    try {
        g.validate();
    } catch (const InvalidKey& e) {
        throw FormatError(std::string("invalid grid: ") + e.what());
    }
    return g;
}

json payload_to_json(const Level1Payload& p) {
    json isotopics = json::array();
    for (const auto& iso : p.isotopics) {
        isotopics.push_back({{"nuclide", iso.nuclide},
                             {"wt_pct", static_cast<double>(iso.centi_percent) / 100.0}});
    }
    return json{{"warheads", p.warhead_count},
                {"missiles", p.missile_count},
                {"uranium_kg", static_cast<double>(p.uranium_g) / 1000.0},
                {"plutonium_kg", static_cast<double>(p.plutonium_g) / 1000.0},
                {"isotopics", std::move(isotopics)},
                {"free_text", p.free_text}};
}

Level1Payload payload_from_json(const json& j) {
    if (!j.is_object()) throw FormatError("inventory must be a JSON object");
    Level1Payload p;
    p.warhead_count = j.contains("warheads") ? require_uint(j, "warheads") : 0;
    p.missile_count = j.contains("missiles") ? require_uint(j, "missiles") : 0;
    wrap_encoding([&] {
        p.uranium_g = j.contains("uranium_kg") ? kilograms_to_grams(require_number(j, "uranium_kg")) : 0;
        p.plutonium_g =
            j.contains("plutonium_kg") ? kilograms_to_grams(require_number(j, "plutonium_kg")) : 0;
        return 0;
    });
    if (j.contains("isotopics")) {
        const json& list = j.at("isotopics");
        if (!list.is_array()) throw FormatError("isotopics must be an array");
        for (const auto& e : list) {
            Isotopic iso;
            iso.nuclide = require_string(e, "nuclide");
            iso.centi_percent = wrap_encoding([&] { return percent_to_centi(require_number(e, "wt_pct")); });
            p.isotopics.push_back(std::move(iso));
        }
    }
    if (j.contains("free_text") && !j.at("free_text").is_null()) {
        p.free_text = require_string(j, "free_text");
    }
    wrap_encoding([&] {
        validate_payload(p);
        return 0;
    });
    return p;
}

json commitment_to_json(const PublicCommitment& pc) {
    return json{{"format_version", pc.format_version},
                {"root", pc.root.hex()},
                {"suite", pc.suite},
                {"grid", grid_to_json(pc.grid)},
                {"inspector_nonce", to_hex(pc.inspector_nonce)},
                {"created_at", pc.created_at}};
}

PublicCommitment commitment_from_json(const json& j) {
    PublicCommitment pc;
    pc.format_version = static_cast<std::uint32_t>(require_uint(j, "format_version"));
    if (pc.format_version != kFormatVersion) {
        throw FormatError("unsupported commitment format version " +
                          std::to_string(pc.format_version));
    }
    pc.suite = require_string(j, "suite");
    const HashSuite suite = [&] {
        try {
            return parse_suite(pc.suite);
        } catch (const SuiteError& e) {
            throw FormatError(e.what());
        }
    }();
    pc.root = Digest{from_hex(require_string(j, "root")), pc.suite};
    if (pc.root.bytes.size() != suite.output_length()) {
        throw FormatError("root length does not match suite " + pc.suite);
    }
    pc.grid = grid_from_json(require(j, "grid"));
    pc.inspector_nonce = bytes32_from_hex(require_string(j, "inspector_nonce"));
    pc.created_at = j.contains("created_at") ? require_string(j, "created_at") : "";
    return pc;
}

json proof_to_json(const MerkleProof& proof) {
    json siblings = json::array();
    for (const auto& s : proof.siblings) siblings.push_back(s.hex());
    return json{{"format_version", kFormatVersion},
                {"suite", proof.suite_id},
                {"key", proof.key.bits()},
                {"leaf_digest", proof.leaf_digest.hex()},
                {"siblings", std::move(siblings)}};
}

MerkleProof proof_from_json(const json& j, const GridSpec& grid) {
    if (require_uint(j, "format_version") != kFormatVersion) {
        throw FormatError("unsupported proof format version");
    }
    MerkleProof proof;
    proof.suite_id = require_string(j, "suite");
    try {
        proof.key = GridKey::parse_bits(require_string(j, "key"), grid);
    } catch (const InvalidKey& e) {
        throw FormatError(e.what());
    }
    proof.leaf_digest = Digest{from_hex(require_string(j, "leaf_digest")), proof.suite_id};
    const json& siblings = require(j, "siblings");
    if (!siblings.is_array()) throw FormatError("siblings must be an array");
    for (const auto& s : siblings) {
        if (!s.is_string()) throw FormatError("sibling must be a hex string");
        proof.siblings.push_back(Digest{from_hex(s.get<std::string>()), proof.suite_id});
    }
    return proof;
}

json revelation_to_json(const Revelation& rev) {
    return json{{"format_version", kFormatVersion},
                {"kind", std::string(to_string(rev.kind))},
                {"level0", to_hex(encode_level0(rev.level0))},
                {"level1", rev.level1 ? json(to_hex(encode_level1(*rev.level1))) : json(nullptr)},
                {"proof", json_codec::proof_to_json(rev.proof)}};
}

Revelation revelation_from_json(const json& j, const GridSpec& grid) {
    if (require_uint(j, "format_version") != kFormatVersion) {
        throw FormatError("unsupported revelation format version");
    }
    Revelation rev;
    rev.kind = parse_revelation_kind(require_string(j, "kind"));
    wrap_encoding([&] {
        rev.level0 = decode_level0(from_hex(require_string(j, "level0")));
        if (j.contains("level1") && !j.at("level1").is_null()) {
            rev.level1 = decode_level1(from_hex(require_string(j, "level1")));
        }
        return 0;
    });
    rev.proof = json_codec::proof_from_json(require(j, "proof"), grid);
    return rev;
}

json level0_to_json(const Level0Preimage& p) {
    json out{{"presence", p.presence == Presence::kPresent ? "PRESENT" : "ABSENT"},
             {"inspector_nonce", to_hex(p.inspector_nonce)},
             {"level1_digest", to_hex(p.level1_digest)}};
    if (p.presence == Presence::kPresent) {
        out["facility_type"] = p.facility_type;
        out["status"] = p.status;
    }
    if (p.coordinates) {
        out["i"] = p.coordinates->i;
        out["j"] = p.coordinates->j;
    }
    return out;
}

json parse(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("invalid JSON: ") + e.what());
    }
}

}  // namespace tescrow::json_codec
