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

#include <string>

#include "tescrow/escrow.hpp"

namespace tescrow {

class EscrowBuilder {
  public:
    /// Validates the declaration, commits every leaf and builds the tree.
    static EscrowPackage build(Declaration declaration, const Bytes32& inspector_nonce,
                               const HashSuite& suite, const GridSpec& grid,
                               const Bytes32& master_secret, std::string created_at);
};

}  // namespace tescrow
