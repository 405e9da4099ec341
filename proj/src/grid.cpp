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

#include "tescrow/grid.hpp"

#include <cmath>

#include "tescrow/errors.hpp"

namespace tescrow {

namespace {

constexpr std::int64_t kMicro = 1'000'000;

std::int64_t to_micro(double deg) { return std::llround(deg * 1e6); }

/// One grid step expressed in micro-minutes.
std::int64_t step_micro_minutes(const GridSpec& spec) {
    return static_cast<std::int64_t>(spec.resolution_minutes) * kMicro;
}

/// Round num/den to nearest, ties to even; num >= 0, den > 0.
std::int64_t round_half_even(std::int64_t num, std::int64_t den) {
    std::int64_t q = num / den;
    const std::int64_t r = num % den;
    if (2 * r > den || (2 * r == den && (q % 2) != 0)) ++q;
    return q;
}

std::uint32_t steps_between(double lo, double hi, const GridSpec& spec) {
    const std::int64_t span = (to_micro(hi) - to_micro(lo)) * 60;
    return static_cast<std::uint32_t>(span / step_micro_minutes(spec));
}

}  // namespace

std::uint32_t GridSpec::i_max() const { return steps_between(lon_min_deg, lon_max_deg, *this); }

std::uint32_t GridSpec::j_max() const { return steps_between(lat_min_deg, lat_max_deg, *this); }

void GridSpec::validate() const {
    if (resolution_minutes == 0) throw InvalidKey("grid resolution must be positive");
    if (i_bits == 0 || j_bits == 0 || i_bits + j_bits > 30) {
        throw InvalidKey("grid bit widths must be positive and total at most 30");
    }
    const std::int64_t lon_span = (to_micro(lon_max_deg) - to_micro(lon_min_deg)) * 60;
    const std::int64_t lat_span = (to_micro(lat_max_deg) - to_micro(lat_min_deg)) * 60;
    if (lon_span <= 0 || lat_span <= 0) throw InvalidKey("grid bounding box is empty");
    if (lon_span % step_micro_minutes(*this) != 0 || lat_span % step_micro_minutes(*this) != 0) {
        throw InvalidKey("grid extent is not a whole number of steps");
    }
    if (i_max() >= (1u << i_bits) || j_max() >= (1u << j_bits)) {
        throw InvalidKey("grid does not fit in the configured key widths");
    }
}

std::string GridKey::bits() const {
    std::string out;
    out.reserve(depth());
    for (std::uint32_t b = i_bits; b-- > 0;) out.push_back(((i >> b) & 1u) ? '1' : '0');
    for (std::uint32_t b = j_bits; b-- > 0;) out.push_back(((j >> b) & 1u) ? '1' : '0');
    return out;
}

GridKey GridKey::from_bits(std::string_view bits, const GridSpec& spec) {
    GridKey key = parse_bits(bits, spec);
    if (!in_domain(key, spec)) {
        throw InvalidKey("key " + std::string(bits) + " decodes to i=" + std::to_string(key.i) +
                         ", j=" + std::to_string(key.j) + " outside the grid");
    }
    return key;
}

GridKey GridKey::parse_bits(std::string_view bits, const GridSpec& spec) {
    if (bits.size() != spec.depth()) {
        throw InvalidKey("key must have " + std::to_string(spec.depth()) + " bits, got " +
                         std::to_string(bits.size()));
    }
    std::uint64_t index = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') throw InvalidKey("key contains a non-binary character");
        index = (index << 1) | static_cast<std::uint64_t>(c == '1');
    }
    return from_leaf_index(index, spec);
}

GridKey GridKey::from_leaf_index(std::uint64_t index, const GridSpec& spec) {
    if (index >= spec.leaf_count()) {
        throw InvalidKey("leaf index " + std::to_string(index) + " exceeds tree width");
    }
    const std::uint64_t j_mask = (std::uint64_t{1} << spec.j_bits) - 1;
    return GridKey{static_cast<std::uint32_t>(index >> spec.j_bits),
                   static_cast<std::uint32_t>(index & j_mask), spec.i_bits, spec.j_bits};
}

bool in_domain(const GridKey& key, const GridSpec& spec) {
    return key.i_bits == spec.i_bits && key.j_bits == spec.j_bits && key.i <= spec.i_max() &&
           key.j <= spec.j_max();
}

GeoPoint GeoPoint::from_degrees(double lat_deg, double lon_deg) {
    if (!std::isfinite(lat_deg)) throw BoundsError("latitude", "latitude is not finite");
    if (!std::isfinite(lon_deg)) throw BoundsError("longitude", "longitude is not finite");
    return GeoPoint{to_micro(lat_deg), to_micro(lon_deg)};
}

GridKey coord_to_key(GeoPoint point, const GridSpec& spec) {
    const std::int64_t lat_lo = to_micro(spec.lat_min_deg), lat_hi = to_micro(spec.lat_max_deg);
    const std::int64_t lon_lo = to_micro(spec.lon_min_deg), lon_hi = to_micro(spec.lon_max_deg);
    if (point.lat_micro < lat_lo || point.lat_micro > lat_hi) {
        throw BoundsError("latitude", "latitude " + std::to_string(point.lat_deg()) +
                                          " outside [" + std::to_string(spec.lat_min_deg) + ", " +
                                          std::to_string(spec.lat_max_deg) + "]");
    }
    if (point.lon_micro < lon_lo || point.lon_micro > lon_hi) {
        throw BoundsError("longitude", "longitude " + std::to_string(point.lon_deg()) +
                                           " outside [" + std::to_string(spec.lon_min_deg) + ", " +
                                           std::to_string(spec.lon_max_deg) + "]");
    }
    const std::int64_t step = step_micro_minutes(spec);
    const auto i = round_half_even((point.lon_micro - lon_lo) * 60, step);
    const auto j = round_half_even((lat_hi - point.lat_micro) * 60, step);
    return GridKey{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), spec.i_bits,
                   spec.j_bits};
}

GridKey coord_to_key(double lat_deg, double lon_deg, const GridSpec& spec) {
    return coord_to_key(GeoPoint::from_degrees(lat_deg, lon_deg), spec);
}

bool is_grid_aligned(GeoPoint point, const GridSpec& spec) {
    const GridKey key = coord_to_key(point, spec);
    const std::int64_t step = step_micro_minutes(spec);
    // Offsets in micro-minutes; half a micro-degree is 30 micro-minutes.
    const std::int64_t di =
        (point.lon_micro - to_micro(spec.lon_min_deg)) * 60 - std::int64_t{key.i} * step;
    const std::int64_t dj =
        (to_micro(spec.lat_max_deg) - point.lat_micro) * 60 - std::int64_t{key.j} * step;
    return std::llabs(di) <= 30 && std::llabs(dj) <= 30;
}

std::pair<double, double> key_to_coord(const GridKey& key, const GridSpec& spec) {
    if (!in_domain(key, spec)) {
        throw InvalidKey("key i=" + std::to_string(key.i) + ", j=" + std::to_string(key.j) +
                         " outside the grid");
    }
    const double res = static_cast<double>(spec.resolution_minutes);
    return {spec.lat_max_deg - static_cast<double>(key.j) * res / 60.0,
            spec.lon_min_deg + static_cast<double>(key.i) * res / 60.0};
}

GeoPoint key_to_point(const GridKey& key, const GridSpec& spec) {
    if (!in_domain(key, spec)) {
        throw InvalidKey("key i=" + std::to_string(key.i) + ", j=" + std::to_string(key.j) +
                         " outside the grid");
    }
    const std::int64_t step = step_micro_minutes(spec);
    // n*step/60 micro-degrees; n*10^6 mod 60 is 0, 20 or 40, so no ties.
    const auto offset = [step](std::uint32_t n) {
        return round_half_even(std::int64_t{n} * step, 60);
    };
    return GeoPoint{to_micro(spec.lat_max_deg) - offset(key.j),
                    to_micro(spec.lon_min_deg) + offset(key.i)};
}

std::vector<std::uint8_t> key_to_path(const GridKey& key) {
    std::vector<std::uint8_t> path;
    path.reserve(key.depth());
    for (char c : key.bits()) path.push_back(c == '1' ? 1 : 0);
    return path;
}

std::uint64_t grid_point_count(const GridSpec& spec) {
    return (std::uint64_t{spec.i_max()} + 1) * (std::uint64_t{spec.j_max()} + 1);
}

}  // namespace tescrow
