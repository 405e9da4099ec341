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


// Helpers shared by the unit and acceptance tests. The reference hashes go
// through OpenSSL's one-shot EVP_Digest with the legacy EVP_sha256 /
// EVP_sha3_256 getters, not through the library's HashSuite.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tescrow/escrow.hpp"

namespace tescrow::testing {

std::filesystem::path fixture_path(const std::string& name);
std::string read_fixture(const std::string& name);

Bytes ref_sha256(ByteView msg);
Bytes ref_sha3_256(ByteView msg);
/// Suite names limited to the two primitives and concat of them.
Bytes ref_digest(const std::string& suite, ByteView msg);

Bytes random_bytes(std::mt19937_64& rng, std::size_t n);
Bytes32 random_b32(std::mt19937_64& rng);
Bytes32 fixed_b32(std::uint8_t fill);

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

/// The 150-site sample declaration from the fixtures.
const Declaration& sample_declaration();
/// Nonce 00..1f, secret 5a*32, built once per process and cached.
const EscrowBuild& sample_build(const std::string& suite = "sha2-256");

/// Small synthetic build for fast tests.
EscrowBuild small_build(std::size_t sites, std::uint64_t seed, const std::string& suite = "sha2-256");

/// `count` random valid keys holding no declared site (repeats possible).
std::vector<GridKey> undeclared_keys(const EscrowPackage& pkg, std::size_t count,
                                     std::mt19937_64& rng);
std::vector<GridKey> declared_keys(const EscrowPackage& pkg);

}  // namespace tescrow::testing
