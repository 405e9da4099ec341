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
/// \brief JSON value codecs shared by the file formats, the wire protocol,
/// the HTTP service and the CLI.
///
/// Objects are nlohmann::json with sorted keys, so dump() is canonical.
/// Byte strings are lowercase hex. Parsers throw FormatError.

#pragma once

#include <string>

#include "json.hpp"
#include "tescrow/escrow.hpp"

namespace tescrow::json_codec {

using nlohmann::json;

/// Field access helpers that convert nlohmann errors into FormatError.
const json& require(const json& obj, const char* field);
std::string require_string(const json& obj, const char* field);
std::uint64_t require_uint(const json& obj, const char* field);

json grid_to_json(const GridSpec& grid);
GridSpec grid_from_json(const json& j);

json payload_to_json(const Level1Payload& payload);
Level1Payload payload_from_json(const json& j);

json commitment_to_json(const PublicCommitment& pc);
PublicCommitment commitment_from_json(const json& j);

json proof_to_json(const MerkleProof& proof);
MerkleProof proof_from_json(const json& j, const GridSpec& grid);

json revelation_to_json(const Revelation& rev);
Revelation revelation_from_json(const json& j, const GridSpec& grid);

json level0_to_json(const Level0Preimage& p);

json parse(std::string_view text);

}  // namespace tescrow::json_codec
