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
/// \brief Geographic grid and the binary leaf key.
///
/// A bounding box is covered by a grid of `resolution_minutes` steps. The
/// origin is the north-west corner; i counts steps east and j counts steps
/// south. The key x is binary(i) in i_bits followed by binary(j) in j_bits,
/// both MSB-first, and read as an integer it is the leaf index. Bit 0 of a
/// path step selects the left child.
///
/// Coordinates are handled internally as integer micro-degrees so that
/// bounds, rounding and alignment checks are exact.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tescrow {

struct GridSpec {
    double lat_min_deg = 37.5;
    double lat_max_deg = 43.5;
    double lon_min_deg = 124.0;
    double lon_max_deg = 131.0;
    std::uint32_t resolution_minutes = 1;
    std::uint32_t i_bits = 9;
    std::uint32_t j_bits = 9;

    /// 37.5-43.5 N, 124.0-131.0 E at one-minute resolution, 9+9 bits.
    static GridSpec dprk() { return GridSpec{}; }

    std::uint32_t depth() const noexcept { return i_bits + j_bits; }
    /// Largest valid i (inclusive); 420 for the default grid.
    std::uint32_t i_max() const;
    /// Largest valid j (inclusive); 360 for the default grid.
    std::uint32_t j_max() const;
    std::uint64_t leaf_count() const noexcept { return std::uint64_t{1} << depth(); }

    /// Throws InvalidKey if the box is empty, not a whole number of steps, or
    /// does not fit in the configured bit widths.
    void validate() const;

    bool operator==(const GridSpec&) const = default;
};

struct GridKey {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    std::uint32_t i_bits = 9;
    std::uint32_t j_bits = 9;

    std::uint32_t depth() const noexcept { return i_bits + j_bits; }
    std::uint64_t leaf_index() const noexcept {
        return (std::uint64_t{i} << j_bits) | j;
    }
    /// The key x as a string of '0'/'1', MSB-first.
    std::string bits() const;

    /// Parses x. Throws InvalidKey on wrong length, a non-binary character,
    /// or a decoded (i, j) outside the grid.
    static GridKey from_bits(std::string_view bits, const GridSpec& spec);

    /// Like from_bits but accepts positions outside the grid that still fit
    /// in the key widths.
    static GridKey parse_bits(std::string_view bits, const GridSpec& spec);

    /// Any index below 2^depth, including positions outside the valid grid.
    static GridKey from_leaf_index(std::uint64_t index, const GridSpec& spec);

    bool operator==(const GridKey&) const = default;
};

/// True iff 0 <= i <= i_max and 0 <= j <= j_max.
bool in_domain(const GridKey& key, const GridSpec& spec);

/// A point in integer micro-degrees.
struct GeoPoint {
    std::int64_t lat_micro = 0;
    std::int64_t lon_micro = 0;

    static GeoPoint from_degrees(double lat_deg, double lon_deg);
    double lat_deg() const noexcept { return static_cast<double>(lat_micro) / 1e6; }
    double lon_deg() const noexcept { return static_cast<double>(lon_micro) / 1e6; }

    bool operator==(const GeoPoint&) const = default;
};

/// Nearest grid point, ties to even. Throws BoundsError naming the axis when
/// the point lies outside the box.
GridKey coord_to_key(GeoPoint point, const GridSpec& spec);
GridKey coord_to_key(double lat_deg, double lon_deg, const GridSpec& spec);

/// True when the point lies within half a micro-degree of a grid point on
/// both axes, i.e. it is the 6-decimal rendering of that grid point.
bool is_grid_aligned(GeoPoint point, const GridSpec& spec);

/// lat = lat_max - j*res/60, lon = lon_min + i*res/60. Throws InvalidKey
/// outside the grid.
std::pair<double, double> key_to_coord(const GridKey& key, const GridSpec& spec);

/// key_to_coord rounded to the nearest micro-degree.
GeoPoint key_to_point(const GridKey& key, const GridSpec& spec);

/// MSB-first path bits; 0 = left child.
std::vector<std::uint8_t> key_to_path(const GridKey& key);

/// Number of valid grid points, (i_max+1) * (j_max+1).
std::uint64_t grid_point_count(const GridSpec& spec);

}  // namespace tescrow
