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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tescrow {

using Bytes = std::vector<std::uint8_t>;
using Bytes32 = std::array<std::uint8_t, 32>;
using ByteView = std::span<const std::uint8_t>;

/// Lowercase hex, two characters per byte.
std::string to_hex(ByteView bytes);

/// Accepts upper or lower case. Throws FormatError on odd length or a
/// non-hex character.
Bytes from_hex(std::string_view hex);

/// Like from_hex but requires exactly 32 bytes.
Bytes32 bytes32_from_hex(std::string_view hex);

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// Cryptographically secure random bytes from the system CSPRNG.
Bytes32 random_bytes32();

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp_now();

}  // namespace tescrow
