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
/// \brief Declarer-hosted HTTP+JSON front end for one verification session.
///
/// The service owns a read-only EscrowPackage and one SessionState. Every
/// mutation is applied through the protocol state machine and appended to
/// the JSON-lines log (fsync'd) before the response is sent. On start the
/// log is replayed, so a restarted service resumes where it stopped.
///
/// Roles are told apart by static bearer tokens. Requests that move the
/// session are serialized by a single mutex.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "tescrow/escrow.hpp"
#include "tescrow/protocol.hpp"

namespace tescrow {

struct ServiceConfig {
    std::string listen_address = "127.0.0.1";
    std::uint16_t port = 8080;  // 0 picks a free port
    std::filesystem::path package_path;
    std::filesystem::path log_path;
    std::string inspector_token;
    std::string declarer_token;
};

/// Parses {listen_address, port, package_path, log_path, inspector_token,
/// declarer_token[, role]}. Relative paths resolve against `base_dir`.
ServiceConfig parse_service_config(std::string_view json_text,
                                   const std::filesystem::path& base_dir = {});

struct HttpResponse {
    int status = 200;
    std::string body;  // JSON
};

class SessionService {
  public:
    /// Loads the package and replays the log. Throws IntegrityError if either
    /// is corrupt, or if the log belongs to a different commitment.
    explicit SessionService(ServiceConfig config);
    ~SessionService();

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    /// Transport-independent request handler. `authorization` is the raw
    /// Authorization header value.
    HttpResponse handle(std::string_view method, std::string_view path, std::string_view body,
                        std::string_view authorization);

    /// Binds and serves on a background thread. Throws Error if the port
    /// cannot be bound.
    void start();
    void stop();
    /// The bound port once started.
    std::uint16_t port() const;

    SessionState state() const;
    const PublicCommitment& commitment() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tescrow
