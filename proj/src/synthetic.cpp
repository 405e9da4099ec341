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


#include "tescrow/synthetic.hpp"

#include <array>
#include <random>
#include <set>
#include <string>

#include "tescrow/errors.hpp"

namespace tescrow {

namespace {

constexpr std::array<const char*, 6> kFacilities = {
    "missile_base", "warhead_storage", "enrichment", "reprocessing", "reactor", "test_site",
};
constexpr std::array<const char*, 3> kStatuses = {"operational", "under_construction", "inactive"};

}  // namespace

Declaration synthetic_declaration(std::size_t n, std::uint64_t seed, const GridSpec& grid) {
    const std::uint64_t points = grid_point_count(grid);
    if (n > points) throw DeclarationError("more sites than grid points");
    std::mt19937_64 rng(seed);
    Declaration decl;
    decl.declarer = "synthetic";
    decl.date = "2026-01-01";
    std::set<std::uint64_t> used;
    while (decl.sites.size() < n) {
        const std::uint64_t p = rng() % points;
        if (!used.insert(p).second) continue;
        const GridKey key{static_cast<std::uint32_t>(p / (grid.j_max() + 1)),
                          static_cast<std::uint32_t>(p % (grid.j_max() + 1)), grid.i_bits,
                          grid.j_bits};
        SiteRecord site;
        site.location = key_to_point(key, grid);
        site.facility_type = kFacilities[rng() % kFacilities.size()];
        site.status = kStatuses[rng() % kStatuses.size()];
        site.level1.warhead_count = rng() % 50;
        site.level1.missile_count = rng() % 30;
        site.level1.uranium_g = rng() % 500000;
        site.level1.plutonium_g = rng() % 50000;
        if (rng() % 2 == 0) {
            const auto u235 = static_cast<std::uint16_t>(rng() % 9500);
            site.level1.isotopics = {{"U-235", u235}, {"U-238", static_cast<std::uint16_t>(10000 - u235)}};
        }
        site.level1.free_text = "site " + std::to_string(decl.sites.size());
        decl.sites.push_back(std::move(site));
    }
    return decl;
}

}  // namespace tescrow
