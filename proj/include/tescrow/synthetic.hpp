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
/// \brief Reproducible synthetic declarations for fixtures and benchmarks.

#pragma once

#include <cstddef>
#include <cstdint>

#include "tescrow/escrow.hpp"

namespace tescrow {

/// `n` sites on distinct grid points. Only raw std::mt19937_64 output is
/// used (no std distributions), so the result is the same on every
/// platform. Throws DeclarationError if n exceeds the grid point count.
Declaration synthetic_declaration(std::size_t n, std::uint64_t seed,
                                  const GridSpec& grid = GridSpec::dprk());

}  // namespace tescrow
