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


#include <atomic>
#include <fstream>
#include <random>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "tescrow/errors.hpp"
#include "tescrow/json_codec.hpp"
#include "tescrow/session_service.hpp"
#include "test_support.hpp"

using namespace tescrow;
using namespace tescrow::testing;
using nlohmann::json;

namespace {

const std::string kInspector = "Bearer insp-token";
const std::string kDeclarer = "Bearer decl-token";

struct Fixture {
    TempDir dir;
    EscrowBuild build;
    ServiceConfig config;

    explicit Fixture(std::size_t sites = 4, std::uint64_t seed = 90) : build(small_build(sites, seed)) {
        save_package(build.package, dir / "p.tesc");
        config.port = 0;
        config.package_path = dir / "p.tesc";
        config.log_path = dir / "session.jsonl";
        config.inspector_token = "insp-token";
        config.declarer_token = "decl-token";
    }
    std::vector<GridKey> sites() const { return declared_keys(build.package); }
    std::string nonce_body() const {
        return json{{"nonce", to_hex(build.package.inspector_nonce())}}.dump();
    }
};

json body_of(const HttpResponse& r) { return json::parse(r.body); }

}  // namespace

TEST_CASE("service config parsing") {
    const auto c = parse_service_config(
        R"({"role":"DECLARER_HOST","port":9000,"package_path":"p.tesc","log_path":"/tmp/x.jsonl",
            "inspector_token":"a","declarer_token":"b"})",
        "/base");
    CHECK(c.port == 9000);
    CHECK(c.listen_address == "127.0.0.1");
    CHECK(c.package_path == std::filesystem::path("/base/p.tesc"));
    CHECK(c.log_path == std::filesystem::path("/tmp/x.jsonl"));
    CHECK_THROWS_AS(parse_service_config(R"({"package_path":"p","log_path":"l","inspector_token":"a","declarer_token":"a"})"),
                    FormatError);
    CHECK_THROWS_AS(parse_service_config(R"({"role":"INSPECTOR","package_path":"p","log_path":"l","inspector_token":"a","declarer_token":"b"})"),
                    FormatError);
    CHECK_THROWS_AS(parse_service_config(R"({"package_path":"p","log_path":"l","inspector_token":"a","declarer_token":"b","port":70000})"),
                    FormatError);
    CHECK_THROWS_AS(parse_service_config(R"({"log_path":"l","inspector_token":"a","declarer_token":"b"})"),
                    FormatError);
}

TEST_CASE("endpoints, auth and error mapping") {
    Fixture f;
    SessionService svc(f.config);
    const auto sites = f.sites();

    HttpResponse r = svc.handle("GET", "/commitment", "", "");
    CHECK(r.status == 200);
    CHECK(r.body == commitment_to_json(f.build.commitment));

    CHECK(svc.handle("GET", "/session", "", "").status == 401);
    CHECK(svc.handle("GET", "/session", "", "Bearer nope").status == 401);
    CHECK(svc.handle("GET", "/nowhere", "", kInspector).status == 404);
    CHECK(svc.handle("GET", "/reveal", "", kDeclarer).status == 405);
    CHECK(svc.handle("POST", "/commitment", "", kInspector).status == 405);
    r = svc.handle("POST", "/reveal", "{}", kInspector);
    CHECK(r.status == 401);
    CHECK(body_of(r)["error"] == "WrongRole");

    r = svc.handle("POST", "/nonce", json{{"nonce", std::string(64, 'e')}}.dump(), kInspector);
    CHECK(r.status == 409);
    CHECK(body_of(r)["error"] == "NonceMismatch");
    CHECK(svc.state().phase == Phase::kSetup);
    r = svc.handle("POST", "/nonce", f.nonce_body(), kInspector);
    REQUIRE(r.status == 200);
    CHECK(body_of(r)["phase"] == "COMMITTED");
    CHECK(svc.handle("POST", "/nonce", f.nonce_body(), kInspector).status == 409);

    CHECK(svc.handle("POST", "/reveal", "{not json", kDeclarer).status == 400);
    CHECK(svc.handle("POST", "/reveal", "[1]", kDeclarer).status == 400);
    r = svc.handle("POST", "/reveal", json{{"key", "0101"}}.dump(), kDeclarer);
    CHECK(r.status == 400);
    r = svc.handle("POST", "/challenge", json{{"lat", 50.0}, {"lon", 130.0}}.dump(), kInspector);
    CHECK(r.status == 400);
    CHECK(body_of(r)["error"] == "BoundsError");

    // Absence challenge is answered at once.
    std::mt19937_64 rng(90);
    const GridKey empty = undeclared_keys(f.build.package, 1, rng)[0];
    const auto [lat, lon] = key_to_coord(empty, f.build.package.grid());
    r = svc.handle("POST", "/challenge", json{{"lat", lat}, {"lon", lon}}.dump(), kInspector);
    REQUIRE(r.status == 200);
    json j = body_of(r);
    CHECK(j["verification"] == "OK");
    CHECK(j["cell_state"] == "PROVEN_ABSENT");
    const Revelation rev = parse_revelation(j["revelation"].dump(), f.build.package.grid());
    CHECK(verify_revelation(f.build.commitment, rev) == VerifyStatus::kOk);

    r = svc.handle("POST", "/reveal", json{{"key", empty.bits()}, {"level", "L1"}}.dump(), kDeclarer);
    CHECK(r.status == 409);
    CHECK(body_of(r)["error"] == "NotASite");

    // Declared-site challenge waits for the declarer.
    const GeoPoint site0 = f.build.package.declaration().sites[0].location;
    const GridKey key0 = coord_to_key(site0, f.build.package.grid());
    r = svc.handle("POST", "/challenge",
                   json{{"lat", site0.lat_deg()}, {"lon", site0.lon_deg()}}.dump(), kInspector);
    REQUIRE(r.status == 200);
    CHECK(body_of(r)["revelation"].is_null());
    CHECK(body_of(r)["cell_state"] == "CHALLENGED");
    r = svc.handle("POST", "/reveal", json{{"key", key0.bits()}}.dump(), kDeclarer);
    REQUIRE(r.status == 200);
    CHECK(body_of(r)["cell_state"] == "REVEALED_L0");

    r = svc.handle("POST", "/inspection", json{{"key", key0.bits()}, {"observed", json::object()}}.dump(),
                   kInspector);
    CHECK(r.status == 409);

    r = svc.handle("POST", "/reveal-request", json{{"key", sites[1].bits()}, {"level", "L0"}}.dump(), kInspector);
    REQUIRE(r.status == 200);
    CHECK(body_of(r)["required"][0]["type"] == "REVEAL");
    for (std::size_t n = 1; n < sites.size(); ++n) {
        REQUIRE(svc.handle("POST", "/reveal", json{{"key", sites[n].bits()}}.dump(), kDeclarer).status == 200);
    }
    CHECK(svc.handle("POST", "/select-targets", json{{"inspector_seed", std::string(64, '1')}, {"k", 9}}.dump(),
                     kInspector).status == 409);
    r = svc.handle("POST", "/select-targets", json{{"inspector_seed", std::string(64, '1')}, {"k", 2}}.dump(),
                   kInspector);
    REQUIRE(r.status == 200);
    j = body_of(r);
    REQUIRE(j["targets"].size() == 2);
    std::vector<GridKey> candidates = sites;
    const auto expected = select_targets(f.build.commitment, bytes32_from_hex(j["declarer_seed"].get<std::string>()),
                                         bytes32_from_hex(j["inspector_seed"].get<std::string>()), candidates, 2);
    CHECK(j["targets"][0] == expected[0].bits());
    CHECK(j["targets"][1] == expected[1].bits());

    for (const GridKey& k : sites) {
        r = svc.handle("POST", "/reveal", json{{"key", k.bits()}, {"level", "L1"}}.dump(), kDeclarer);
        REQUIRE(r.status == 200);
        const json rv = body_of(r);
        CHECK(rv["verification"] == "OK");
        CHECK(rv["cell_state"] == "REVEALED_L1");
    }
    // Every site at level 1 and no open challenge: the claim was sent.
    CHECK(svc.state().phase == Phase::kComplete);
    for (const GridKey& k : sites) {
        const json observed = json_codec::payload_to_json(f.build.package.level1_at(k)->payload);
        r = svc.handle("POST", "/inspection", json{{"key", k.bits()}, {"observed", observed}, {"verdict", "CONSISTENT"}}.dump(),
                       kInspector);
        REQUIRE(r.status == 200);
        CHECK(body_of(r)["verdict"] == "CONSISTENT");
    }
    r = svc.handle("GET", "/session", "", kDeclarer);
    REQUIRE(r.status == 200);
    j = body_of(r);
    CHECK(j["report"]["all_clear"] == true);
    CHECK(j["report"]["declared_sites"] == 4);

    r = svc.handle("GET", "/log", "", kInspector);
    REQUIRE(r.status == 200);
    CHECK(body_of(r).size() == svc.state().event_log.size());
}

TEST_CASE("discrepant inspection over the wire") {
    Fixture f(1, 91);
    SessionService svc(f.config);
    const GridKey key = f.sites()[0];
    REQUIRE(svc.handle("POST", "/nonce", f.nonce_body(), kInspector).status == 200);
    REQUIRE(svc.handle("POST", "/reveal", json{{"key", key.bits()}, {"level", "L1"}}.dump(), kDeclarer).status == 200);
    json observed = json_codec::payload_to_json(f.build.package.level1_at(key)->payload);
    observed["warheads"] = observed["warheads"].get<std::uint64_t>() + 1;
    HttpResponse r = svc.handle("POST", "/inspection",
                                json{{"key", key.bits()}, {"observed", observed}, {"verdict", "CONSISTENT"}}.dump(),
                                kInspector);
    CHECK(r.status == 409);
    r = svc.handle("POST", "/inspection", json{{"key", key.bits()}, {"observed", observed}}.dump(), kInspector);
    REQUIRE(r.status == 200);
    const json j = body_of(r);
    CHECK(j["verdict"] == "DISCREPANT");
    REQUIRE(j["diff"].size() == 1);
    CHECK(j["diff"][0]["field"] == "warhead_count");
}

TEST_CASE("restart resumes from the log") {
    Fixture f(3, 92);
    std::mt19937_64 rng(92);
    json report;
    SessionState before;
    {
        SessionService svc(f.config);
        REQUIRE(svc.handle("POST", "/nonce", f.nonce_body(), kInspector).status == 200);
        for (const GridKey& k : undeclared_keys(f.build.package, 3, rng)) {
            svc.handle("POST", "/challenge", json{{"key", k.bits()}}.dump(), kInspector);
        }
        REQUIRE(svc.handle("POST", "/reveal", json{{"key", f.sites()[0].bits()}}.dump(), kDeclarer).status == 200);
        report = body_of(svc.handle("GET", "/session", "", kInspector));
        before = svc.state();
    }
    {
        SessionService svc(f.config);
        CHECK(svc.state() == before);
        CHECK(body_of(svc.handle("GET", "/session", "", kInspector)) == report);
        REQUIRE(svc.handle("POST", "/reveal", json{{"key", f.sites()[1].bits()}}.dump(), kDeclarer).status == 200);
        CHECK(svc.state().last_sequence == before.last_sequence + 1);
    }
    const std::string text = read_text_file(f.config.log_path);
    CHECK(parse_log(text).size() == before.event_log.size() + 1);

    // Truncated final line.
    write_text_file(f.config.log_path, text.substr(0, text.size() - 10));
    try {
        SessionService svc(f.config);
        FAIL("service accepted a truncated log");
    } catch (const IntegrityError& e) {
        CHECK(e.location() == "log entry " + std::to_string(before.event_log.size()));
    }

    // Log of another package.
    Fixture other(3, 93);
    write_text_file(other.config.log_path, text);
    CHECK_THROWS_AS(SessionService(other.config), IntegrityError);
}

TEST_CASE("HTTP transport and concurrent requests") {
    Fixture f(24, 94);
    SessionService svc(f.config);
    svc.start();
    REQUIRE(svc.port() != 0);
    httplib::Client cli("127.0.0.1", svc.port());
    cli.set_read_timeout(30, 0);

    auto res = cli.Get("/commitment");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body == commitment_to_json(f.build.commitment));
    res = cli.Get("/session");
    REQUIRE(res);
    CHECK(res->status == 401);
    res = cli.Post("/nonce", {{"Authorization", kInspector}}, f.nonce_body(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);

    // A second service on the same port fails to bind.
    ServiceConfig busy = f.config;
    busy.port = svc.port();
    busy.log_path = f.dir / "other.jsonl";
    SessionService clash(busy);
    CHECK_THROWS_AS(clash.start(), Error);

    const auto sites = f.sites();
    std::mt19937_64 rng(94);
    const auto empties = undeclared_keys(f.build.package, 24, rng);
    std::atomic<int> ok{0};
    std::vector<std::thread> workers;
    for (int t = 0; t < 8; ++t) {
        workers.emplace_back([&, t] {
            httplib::Client c("127.0.0.1", svc.port());
            c.set_read_timeout(30, 0);
            for (std::size_t n = static_cast<std::size_t>(t); n < sites.size(); n += 8) {
                auto a = c.Post("/reveal", {{"Authorization", kDeclarer}},
                                json{{"key", sites[n].bits()}, {"level", "L1"}}.dump(), "application/json");
                auto b = c.Post("/challenge", {{"Authorization", kInspector}},
                                json{{"key", empties[n].bits()}}.dump(), "application/json");
                auto g = c.Get("/session", {{"Authorization", kInspector}});
                if (a && a->status == 200) ++ok;
                if (b && (b->status == 200 || b->status == 409)) ++ok;
                if (g && g->status == 200) ++ok;
            }
        });
    }
    for (auto& w : workers) w.join();
    CHECK(ok == 72);
    svc.stop();

    const SessionState s = svc.state();
    const auto logged = parse_log(read_text_file(f.config.log_path));
    REQUIRE(logged == s.event_log);
    for (std::size_t n = 0; n < logged.size(); ++n) REQUIRE(logged[n].message.sequence == n + 1);
    CHECK(replay(logged) == s);
    CHECK(completeness_report(s).revealed_sites == 24);
    CHECK(s.phase == Phase::kComplete);
}
