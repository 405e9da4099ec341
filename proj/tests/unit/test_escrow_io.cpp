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


#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "tescrow/errors.hpp"
#include "tescrow/escrow.hpp"
#include "tescrow/synthetic.hpp"
#include "test_support.hpp"

using namespace tescrow;
using namespace tescrow::testing;
using nlohmann::json;

namespace {

void check_same_package(const EscrowPackage& a, const EscrowPackage& b) {
    CHECK(a.declaration() == b.declaration());
    CHECK(a.master_secret() == b.master_secret());
    CHECK(a.inspector_nonce() == b.inspector_nonce());
    CHECK(a.suite().name() == b.suite().name());
    CHECK(a.grid() == b.grid());
    CHECK(a.created_at() == b.created_at());
    CHECK(a.root() == b.root());
    CHECK(a.commitment() == b.commitment());
}

std::string location_of(ByteView bytes) {
    try {
        deserialize_package(bytes);
    } catch (const IntegrityError& e) {
        return e.location();
    }
    return {};
}

}  // namespace

TEST_CASE("package roundtrip through bytes and files") {
    for (const char* suite : {"sha2-256", "concat(sha2-256,sha3-256)"}) {
        CAPTURE(suite);
        const EscrowBuild& b = sample_build(suite);
        const Bytes bytes = serialize_package(b.package);
        REQUIRE(std::equal(bytes.begin(), bytes.begin() + 4, "TESC"));
        const EscrowPackage back = deserialize_package(bytes);
        check_same_package(back, b.package);
        CHECK(serialize_package(back) == bytes);

        TempDir dir;
        save_package(b.package, dir / "p.tesc");
        save_commitment(b.commitment, dir / "c.json");
        check_same_package(load_package(dir / "p.tesc"), b.package);
        CHECK(load_commitment(dir / "c.json") == b.commitment);
        CHECK(read_text_file(dir / "c.json") == commitment_to_json(b.commitment));
    }
}

TEST_CASE("commitment JSON is canonical") {
    const EscrowBuild& b = sample_build();
    const std::string text = commitment_to_json(b.commitment);
    CHECK(text.back() == '\n');
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    const json j = json::parse(text);
    CHECK(j["format_version"] == 1);
    CHECK(j["suite"] == "sha2-256");
    CHECK(j["root"].get<std::string>().size() == 64);
    CHECK(j["inspector_nonce"].get<std::string>().size() == 64);
    CHECK(j["grid"]["resolution_minutes"] == 1);
    CHECK(parse_commitment(text) == b.commitment);
    CHECK(commitment_to_json(parse_commitment(text)) == text);

    json bad = j;
    bad["format_version"] = 2;
    CHECK_THROWS_AS(parse_commitment(bad.dump()), FormatError);
    bad = j;
    bad["suite"] = "md5";
    CHECK_THROWS_AS(parse_commitment(bad.dump()), FormatError);
    bad = j;
    bad["root"] = j["root"].get<std::string>().substr(2);
    CHECK_THROWS_AS(parse_commitment(bad.dump()), FormatError);
    bad = j;
    bad.erase("grid");
    CHECK_THROWS_AS(parse_commitment(bad.dump()), FormatError);
    CHECK_THROWS_AS(parse_commitment("{"), FormatError);
}

TEST_CASE("declaration JSON roundtrip") {
    const Declaration& d = sample_declaration();
    const std::string text = declaration_to_json(d);
    CHECK(parse_declaration(text) == d);
    CHECK(declaration_to_json(parse_declaration(text)) == text);
    CHECK(parse_declaration(read_fixture("sample_declaration_150.json")) == d);

    const json j = json::parse(text);
    json bad = j;
    bad["sites"][0].erase("lat");
    CHECK_THROWS_AS(parse_declaration(bad.dump()), FormatError);
    bad = j;
    bad["sites"][0]["warheads"] = -1;
    CHECK_THROWS_AS(parse_declaration(bad.dump()), FormatError);
    bad = j;
    bad["sites"][0]["isotopics"] = json::array({{{"nuclide", "U-235"}, {"wt_pct", 101.0}}});
    CHECK_THROWS_AS(parse_declaration(bad.dump()), FormatError);
    CHECK_THROWS_AS(parse_declaration("[]"), FormatError);
}

TEST_CASE("revelation and proof JSON roundtrip") {
    const EscrowBuild& b = sample_build("concat(sha2-256,sha3-256)");
    std::mt19937_64 rng(61);
    std::vector<Revelation> revs;
    for (const GridKey& key : declared_keys(b.package)) {
        revs.push_back(reveal(b.package, key, RevealLevel::kL1));
        if (revs.size() == 10) break;
    }
    revs.push_back(reveal(b.package, declared_keys(b.package)[0], RevealLevel::kL0));
    for (const GridKey& key : undeclared_keys(b.package, 10, rng)) {
        revs.push_back(prove_absence(b.package, key));
    }
    for (const Revelation& rev : revs) {
        const std::string text = revelation_to_json(rev);
        const Revelation back = parse_revelation(text, b.package.grid());
        REQUIRE(back == rev);
        REQUIRE(revelation_to_json(back) == text);
        REQUIRE(verify_revelation(b.commitment, back) == VerifyStatus::kOk);
        const std::string proof = proof_to_json(rev.proof);
        REQUIRE(parse_proof(proof, b.package.grid()) == rev.proof);
    }
    json bad = json::parse(revelation_to_json(revs[0]));
    bad["level0"] = "zz";
    CHECK_THROWS_AS(parse_revelation(bad.dump(), b.package.grid()), FormatError);
    bad = json::parse(revelation_to_json(revs[0]));
    bad["proof"]["key"] = "01";
    CHECK_THROWS_AS(parse_revelation(bad.dump(), b.package.grid()), FormatError);
    bad = json::parse(revelation_to_json(revs[0]));
    bad["kind"] = "MAYBE";
    CHECK_THROWS(parse_revelation(bad.dump(), b.package.grid()));
}

TEST_CASE("package corruption is detected and located") {
    const EscrowBuild b = small_build(3, 62);
    const Bytes good = serialize_package(b.package);
    REQUIRE(location_of(good).empty());

    CHECK(location_of(ByteView(good).first(3)) == "magic");
    Bytes v = good;
    v[4] ^= 1;
    CHECK(location_of(v) == "format_version");
    v = good;
    v.push_back(0);
    CHECK(location_of(v) == "trailer");
    CHECK_FALSE(location_of(ByteView(good).first(good.size() - 1)).empty());

    // One flipped bit per sampled byte, covering every section.
    std::mt19937_64 rng(62);
    std::set<std::string> seen;
    std::size_t sampled = 0;
    for (std::size_t pos = 0; pos < good.size(); pos += 1 + rng() % 23) {
        Bytes m = good;
        m[pos] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        const std::string loc = location_of(m);
        CAPTURE(pos);
        REQUIRE_FALSE(loc.empty());
        seen.insert(loc.rfind("leaf ", 0) == 0 ? "leaf" : loc);
        ++sampled;
    }
    CHECK(sampled > 40);
    for (const char* section : {"declaration", "checksum"}) {
        CAPTURE(section);
        CHECK(seen.count(section) == 1);
    }
}

TEST_CASE("tampered sections name the failing check") {
    const EscrowBuild b = small_build(3, 63);
    const Bytes good = serialize_package(b.package);
    const auto find = [&](ByteView needle) {
        const auto it = std::search(good.begin(), good.end(), needle.begin(), needle.end());
        REQUIRE(it != good.end());
        return static_cast<std::size_t>(it - good.begin());
    };
    Bytes v = good;
    v[find(b.package.root().bytes)] ^= 0x80;
    CHECK(location_of(v) == "root");

    const GridKey key = declared_keys(b.package)[0];
    v = good;
    v[find(b.package.tree().node_bytes(0, key.leaf_index()))] ^= 0x01;
    CHECK(location_of(v) == "leaf " + key.bits());

    v = good;
    v[find(as_bytes(b.package.created_at()))] ^= 0x01;
    CHECK(location_of(v) == "checksum");
}
