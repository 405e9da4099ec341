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


#include "tescrow/session_service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "tescrow/errors.hpp"
#include "tescrow/json_codec.hpp"

namespace tescrow {

namespace {

using json_codec::json;

HttpResponse json_response(int status, const json& body) { return {status, body.dump() + "\n"}; }

HttpResponse error_response(int status, std::string_view error, std::string_view reason) {
    return json_response(status, json{{"error", error}, {"reason", reason}});
}

int status_for(const std::exception& e) {
    if (dynamic_cast<const ProtocolViolation*>(&e) || dynamic_cast<const NotASite*>(&e) ||
        dynamic_cast<const IsASite*>(&e)) {
        return 409;
    }
    if (dynamic_cast<const IntegrityError*>(&e)) return 500;
    if (dynamic_cast<const Error*>(&e)) return 400;
    return 500;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

/// Append-only JSON-lines file; each line is fsync'd before append() returns.
class LogWriter {
  public:
    explicit LogWriter(const std::filesystem::path& path) {
        fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0) {
            throw Error("cannot open session log " + path.string() + ": " + std::strerror(errno));
        }
    }
    ~LogWriter() {
        if (fd_ >= 0) ::close(fd_);
    }
    LogWriter(const LogWriter&) = delete;
    LogWriter& operator=(const LogWriter&) = delete;

    void append(const std::string& line) {
        std::size_t done = 0;
        while (done < line.size()) {
            const ssize_t n = ::write(fd_, line.data() + done, line.size() - done);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw Error(std::string("session log write failed: ") + std::strerror(errno));
            }
            done += static_cast<std::size_t>(n);
        }
        if (::fsync(fd_) != 0) {
            throw Error(std::string("session log fsync failed: ") + std::strerror(errno));
        }
    }

  private:
    int fd_ = -1;
};

}  // namespace

ServiceConfig parse_service_config(std::string_view json_text,
                                   const std::filesystem::path& base_dir) {
    const json j = json_codec::parse(json_text);
    ServiceConfig c;
    if (j.contains("role") && json_codec::require_string(j, "role") != "DECLARER_HOST") {
        throw FormatError("only role DECLARER_HOST is supported");
    }
    if (j.contains("listen_address")) c.listen_address = json_codec::require_string(j, "listen_address");
    if (j.contains("port")) {
        const std::uint64_t port = json_codec::require_uint(j, "port");
        if (port > 65535) throw FormatError("port out of range");
        c.port = static_cast<std::uint16_t>(port);
    }
    c.package_path = resolve(base_dir, json_codec::require_string(j, "package_path"));
    c.log_path = resolve(base_dir, json_codec::require_string(j, "log_path"));
    c.inspector_token = json_codec::require_string(j, "inspector_token");
    c.declarer_token = json_codec::require_string(j, "declarer_token");
    if (c.inspector_token.empty() || c.declarer_token.empty()) {
        throw FormatError("tokens must be non-empty");
    }
    if (c.inspector_token == c.declarer_token) {
        throw FormatError("inspector and declarer tokens must differ");
    }
    return c;
}

struct SessionService::Impl {
    explicit Impl(ServiceConfig cfg)
        : config(std::move(cfg)),
          package(load_package(config.package_path)),
          public_commitment(package.commitment()) {
        const GridSpec grid = package.grid();
        for (const auto& site : package.declaration().sites) {
            site_keys.push_back(coord_to_key(site.location, grid).leaf_index());
        }
        resume();
        log = std::make_unique<LogWriter>(config.log_path);
    }

    void resume() {
        std::error_code ec;
        if (!std::filesystem::exists(config.log_path, ec)) return;
        const std::string text = read_text_file(config.log_path);
        const std::vector<LogEntry> entries = parse_log(text);
        state = replay(entries);
        for (std::size_t n = 0; n < entries.size(); ++n) {
            const auto* c = std::get_if<msg::Commit>(&entries[n].message.body);
            if (c != nullptr && c->commitment != public_commitment) {
                throw IntegrityError("log entry " + std::to_string(n),
                                     "log entry " + std::to_string(n) +
                                         " commits to a different package");
            }
        }
    }

    /// Applies one message and persists its log entry. Caller holds `mu`.
    std::vector<RequiredResponse> submit(Role sender, MessageBody body,
                                         std::optional<VerifyStatus>* verification = nullptr) {
        if (broken) throw IntegrityError("session log", "session log is unwritable; service is read-only");
        WireMessage m{sender, state.last_sequence + 1, utc_timestamp_now(), std::move(body)};
        auto required = apply(state, m, verification);
        try {
            log->append(json_codec::log_entry_to_json(state.event_log.back()).dump() + "\n");
        } catch (const Error& e) {
            broken = true;
            throw IntegrityError("session log", e.what());
        }
        return required;
    }

    /// Sends COMPLETE_CLAIM once every declared site is at level 1 or later
    /// and no challenge is open.
    void maybe_claim() {
        if (state.phase != Phase::kCommitted && state.phase != Phase::kActive) return;
        for (auto idx : site_keys) {
            const CellState s = state.cell_state(idx);
            if (s != CellState::kRevealedL1 && s != CellState::kInspectedConsistent &&
                s != CellState::kInspectedDiscrepant) {
                return;
            }
        }
        for (const auto& [idx, cell] : state.cells) {
            if (cell.state == CellState::kChallenged) return;
        }
        submit(Role::kDeclarer, msg::CompleteClaim{site_keys.size()});
    }

    GridKey key_from_body(const json& body) const {
        const GridSpec grid = package.grid();
        if (body.contains("key")) {
            const GridKey key = GridKey::parse_bits(json_codec::require_string(body, "key"), grid);
            if (!in_domain(key, grid)) throw InvalidKey("key " + key.bits() + " is outside the grid");
            return key;
        }
        return coord_to_key(point_from_body(body), grid);
    }

    static GeoPoint point_from_body(const json& body) {
        const json& lat = json_codec::require(body, "lat");
        const json& lon = json_codec::require(body, "lon");
        if (!lat.is_number() || !lon.is_number()) throw FormatError("lat and lon must be numbers");
        return GeoPoint::from_degrees(lat.get<double>(), lon.get<double>());
    }

    static RevealLevel level_from_body(const json& body) {
        return body.contains("level") ? parse_reveal_level(json_codec::require_string(body, "level"))
                                      : RevealLevel::kL0;
    }

    json required_json(const std::vector<RequiredResponse>& rs) const {
        json out = json::array();
        for (const auto& r : rs) out.push_back(json_codec::required_to_json(r));
        return out;
    }

    json revelation_result(const Revelation& rev, const std::optional<VerifyStatus>& status) const {
        return json{{"key", rev.proof.key.bits()},
                    {"revelation", json_codec::revelation_to_json(rev)},
                    {"verification", status ? json(std::string(to_string(*status))) : json(nullptr)},
                    {"cell_state", std::string(to_string(state.cell_state(rev.proof.key.leaf_index())))},
                    {"phase", std::string(to_string(state.phase))}};
    }

    HttpResponse post_nonce(const json& body) {
        const Bytes32 nonce = bytes32_from_hex(json_codec::require_string(body, "nonce"));
        if (state.phase != Phase::kSetup) {
            throw ProtocolViolation("NONCE not allowed in phase " + std::string(to_string(state.phase)));
        }
        if (nonce != package.inspector_nonce()) {
            return error_response(409, "NonceMismatch",
                                  "the escrow was built against a different inspector nonce");
        }
        submit(Role::kInspector, msg::Nonce{nonce});
        submit(Role::kDeclarer, msg::Commit{public_commitment});
        return json_response(200, json{{"phase", std::string(to_string(state.phase))},
                                       {"commitment", json_codec::commitment_to_json(public_commitment)}});
    }

    HttpResponse post_reveal_request(const json& body) {
        const GridKey key = key_from_body(body);
        const auto required = submit(Role::kInspector, msg::RevealRequest{key, level_from_body(body)});
        return json_response(200, json{{"key", key.bits()}, {"required", required_json(required)}});
    }

    HttpResponse post_reveal(const json& body) {
        const GridKey key = key_from_body(body);
        const RevealLevel level = level_from_body(body);
        Revelation rev = reveal(package, key, level);
        std::optional<VerifyStatus> status;
        submit(Role::kDeclarer, msg::Reveal{rev}, &status);
        maybe_claim();
        return json_response(200, revelation_result(rev, status));
    }

    /// An undeclared cell is answered at once with an absence proof. A
    /// declared cell stays CHALLENGED until the declarer reveals it.
    HttpResponse post_challenge(const json& body) {
        const GeoPoint point = body.contains("key") ? key_to_point(key_from_body(body), package.grid())
                                                    : point_from_body(body);
        const GridKey key = coord_to_key(point, package.grid());
        const auto required = submit(Role::kInspector, msg::Challenge{point});
        if (package.site_at(key)) {
            return json_response(200, json{{"key", key.bits()},
                                           {"revelation", nullptr},
                                           {"verification", nullptr},
                                           {"cell_state", std::string(to_string(CellState::kChallenged))},
                                           {"phase", std::string(to_string(state.phase))},
                                           {"required", required_json(required)}});
        }
        const Revelation rev = prove_absence(package, key);
        std::optional<VerifyStatus> status;
        submit(Role::kDeclarer, msg::ChallengeResponse{rev}, &status);
        maybe_claim();
        return json_response(200, revelation_result(rev, status));
    }

    HttpResponse post_inspection(const json& body) {
        const GridKey key = key_from_body(body);
        const Level1Payload observed = json_codec::payload_from_json(json_codec::require(body, "observed"));
        const auto it = state.cells.find(key.leaf_index());
        if (it == state.cells.end() || it->second.state != CellState::kRevealedL1) {
            throw ProtocolViolation("inspection of " + key.bits() + " requires REVEALED_L1, cell is " +
                                    std::string(to_string(state.cell_state(key.leaf_index()))));
        }
        const InspectionVerdict verdict = compare_inventory(*it->second.declared, observed);
        if (body.contains("verdict")) {
            const std::string claimed = json_codec::require_string(body, "verdict");
            const std::string actual =
                verdict.verdict == InspectionVerdict::Kind::kConsistent ? "CONSISTENT" : "DISCREPANT";
            if (claimed != actual) {
                throw ProtocolViolation("reported verdict " + claimed + " disagrees with the inventory diff (" +
                                        actual + ")");
            }
        }
        submit(Role::kInspector, msg::InspectionResult{key, observed, verdict});
        maybe_claim();
        json out = json_codec::verdict_to_json(verdict);
        out["key"] = key.bits();
        out["cell_state"] = std::string(to_string(state.cell_state(key.leaf_index())));
        out["phase"] = std::string(to_string(state.phase));
        return json_response(200, out);
    }

    HttpResponse post_select_targets(const json& body) {
        const Bytes32 inspector_seed = bytes32_from_hex(json_codec::require_string(body, "inspector_seed"));
        const std::uint64_t k = json_codec::require_uint(body, "k");
        std::uint64_t candidates = 0;
        for (const auto& [idx, cell] : state.cells) {
            if (cell.state == CellState::kRevealedL0) ++candidates;
        }
        if (state.phase != Phase::kCommitted && state.phase != Phase::kActive) {
            throw ProtocolViolation("SELECT_TARGETS not allowed in phase " +
                                    std::string(to_string(state.phase)));
        }
        if (k == 0 || k > candidates) {
            throw ProtocolViolation("k = " + std::to_string(k) + " must be in [1, " +
                                    std::to_string(candidates) + "] (REVEALED_L0 sites)");
        }
        const Bytes32 declarer_seed = random_bytes32();
        submit(Role::kInspector, msg::SelectTargets{inspector_seed, static_cast<std::uint32_t>(k)});
        const auto required = submit(Role::kDeclarer, msg::SelectTargets{declarer_seed, 0});
        json targets = json::array();
        for (const auto& r : required) targets.push_back(r.key->bits());
        return json_response(200, json{{"targets", std::move(targets)},
                                       {"declarer_seed", to_hex(declarer_seed)},
                                       {"inspector_seed", to_hex(inspector_seed)},
                                       {"k", k},
                                       {"required", required_json(required)}});
    }

    HttpResponse get_session() const {
        return json_response(200, json{{"state", json_codec::state_to_json(state)},
                                       {"report", json_codec::report_to_json(completeness_report(state),
                                                                             package.grid())}});
    }

    HttpResponse get_log() const {
        json entries = json::array();
        for (const auto& e : state.event_log) entries.push_back(json_codec::log_entry_to_json(e));
        return json_response(200, entries);
    }

    std::optional<Role> authenticate(std::string_view authorization) const {
        constexpr std::string_view kBearer = "Bearer ";
        if (authorization.substr(0, kBearer.size()) != kBearer) return std::nullopt;
        const std::string_view token = authorization.substr(kBearer.size());
        if (token == config.inspector_token) return Role::kInspector;
        if (token == config.declarer_token) return Role::kDeclarer;
        return std::nullopt;
    }

    HttpResponse route(std::string_view method, std::string_view path, std::string_view body,
                       std::string_view authorization) {
        struct Route {
            std::string_view method;
            std::string_view path;
            std::optional<Role> role;  // nullopt: either role
        };
        static constexpr std::array<std::pair<std::string_view, std::string_view>, 3> kGets = {{
            {"GET", "/commitment"}, {"GET", "/session"}, {"GET", "/log"}}};
        static const std::vector<Route> kPosts = {
            {"POST", "/nonce", Role::kInspector},         {"POST", "/reveal-request", Role::kInspector},
            {"POST", "/reveal", Role::kDeclarer},         {"POST", "/challenge", Role::kInspector},
            {"POST", "/inspection", Role::kInspector},    {"POST", "/select-targets", Role::kInspector},
        };

        if (method == "GET" && path == "/commitment") {
            return {200, commitment_to_json(public_commitment)};
        }
        bool known_path = false;
        const Route* match = nullptr;
        for (const auto& [m, p] : kGets) known_path |= p == path;
        for (const auto& r : kPosts) {
            if (r.path == path) {
                known_path = true;
                if (r.method == method) match = &r;
            }
        }
        const bool is_get = method == "GET" && (path == "/session" || path == "/log");
        if (!known_path) return error_response(404, "NotFound", "no endpoint " + std::string(path));
        if (!is_get && match == nullptr) {
            return error_response(405, "MethodNotAllowed",
                                  std::string(method) + " is not supported on " + std::string(path));
        }

        const std::optional<Role> role = authenticate(authorization);
        if (!role) return error_response(401, "Unauthorized", "missing or unknown bearer token");
        if (match != nullptr && match->role && *match->role != *role) {
            return error_response(401, "WrongRole",
                                  std::string(path) + " requires the " +
                                      std::string(to_string(*match->role)) + " token");
        }

        std::lock_guard<std::mutex> lock(mu);
        if (path == "/session") return get_session();
        if (path == "/log") return get_log();

        const json j = json_codec::parse(body.empty() ? std::string_view("{}") : body);
        if (!j.is_object()) throw FormatError("request body must be a JSON object");
        if (path == "/nonce") return post_nonce(j);
        if (path == "/reveal-request") return post_reveal_request(j);
        if (path == "/reveal") return post_reveal(j);
        if (path == "/challenge") return post_challenge(j);
        if (path == "/inspection") return post_inspection(j);
        return post_select_targets(j);
    }

    ServiceConfig config;
    const EscrowPackage package;
    const PublicCommitment public_commitment;
    std::vector<std::uint64_t> site_keys;
    SessionState state;
    std::unique_ptr<LogWriter> log;
    bool broken = false;
    mutable std::mutex mu;

    httplib::Server server;
    std::thread thread;
    std::uint16_t bound_port = 0;
};

SessionService::SessionService(ServiceConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

SessionService::~SessionService() { stop(); }

HttpResponse SessionService::handle(std::string_view method, std::string_view path,
                                    std::string_view body, std::string_view authorization) {
    try {
        return impl_->route(method, path, body, authorization);
    } catch (const nlohmann::json::exception& e) {
        return error_response(400, "FormatError", e.what());
    } catch (const std::exception& e) {
        return error_response(status_for(e), error_name(e), e.what());
    }
}

void SessionService::start() {
    if (impl_->thread.joinable()) return;
    auto& server = impl_->server;
    const auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
        const HttpResponse r =
            handle(req.method, req.path, req.body, req.get_header_value("Authorization"));
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    // httplib's default adds SO_REUSEPORT, which lets a second service share the port.
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    server.Get(".*", dispatch);
    server.Post(".*", dispatch);
    server.Put(".*", dispatch);
    server.Delete(".*", dispatch);

    const std::string& host = impl_->config.listen_address;
    if (impl_->config.port == 0) {
        const int port = server.bind_to_any_port(host);
        if (port <= 0) throw Error("cannot bind " + host + ": no free port");
        impl_->bound_port = static_cast<std::uint16_t>(port);
    } else {
        if (!server.bind_to_port(host, impl_->config.port)) {
            throw Error("cannot bind " + host + ":" + std::to_string(impl_->config.port) +
                        ": port busy or address unavailable");
        }
        impl_->bound_port = impl_->config.port;
    }
    impl_->thread = std::thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();
}

void SessionService::stop() {
    if (!impl_ || !impl_->thread.joinable()) return;
    impl_->server.stop();
    impl_->thread.join();
}

std::uint16_t SessionService::port() const { return impl_->bound_port; }

SessionState SessionService::state() const {
    std::lock_guard<std::mutex> lock(impl_->mu);
    return impl_->state;
}

const PublicCommitment& SessionService::commitment() const { return impl_->public_commitment; }

}  // namespace tescrow
