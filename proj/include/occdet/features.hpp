#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "occdet/types.hpp"

namespace occdet {

/// The feature menu. avg: room mean CO2. fd: its first difference.
/// vd: upper-minus-lower sensor difference. fdvd: first difference of vd.
/// hd: near-window-minus-far difference. vent: window-opening rating.
enum class Feature { avg, fd, vd, fdvd, hd, vent };

constexpr std::array<Feature, 6> kCanonicalFeatureOrder = {
    Feature::avg, Feature::fd, Feature::vd, Feature::fdvd, Feature::hd, Feature::vent};

std::string feature_name(Feature f);       // "AVG", "FD", ...
std::string feature_flag(Feature f);       // "avg", "fd", ...
Feature feature_from_flag(const std::string& flag);

/// Parse a comma list like "avg,fd,vd". Unknown names raise ValidationError
/// listing the valid menu.
std::vector<Feature> parse_feature_set(const std::string& csv);

struct FeatureSpec {
    std::vector<Feature> kinds;  // stored in canonical order, duplicates removed
    std::optional<std::pair<std::string, std::string>> vd_pair;  // (upper, lower)
    std::optional<std::pair<std::string, std::string>> hd_pair;  // (near, far)

    bool has(Feature f) const;
    bool needs_first_difference() const { return has(Feature::fd) || has(Feature::fdvd); }
};

/// Build a FeatureSpec for a dataset: canonicalize the requested kinds and
/// resolve the sensor pairs from the room metadata as needed.
FeatureSpec make_feature_spec(const std::vector<Feature>& kinds, const Dataset& ds);

/// The pair for the vertical difference: among device pairs more than 1 m
/// apart in height, the horizontally closest one. Returns (upper, lower).
std::pair<std::string, std::string> select_vertical_pair(
    const std::vector<DeviceMeta>& devices);

/// The pair for the horizontal difference: a window-nearest and a
/// window-farthest device, picking the combination with the smallest height
/// difference. Returns (near, far).
std::pair<std::string, std::string> select_horizontal_pair(
    const std::vector<DeviceMeta>& devices);

struct FeatureMatrix {
    std::vector<std::string> names;    // column names, canonical order
    Matrix values;                     // one row per retained grid point
    std::vector<int> occupants;        // aligned labels
    std::vector<std::int64_t> timestamps;
};

/// Evaluate the spec on a dataset. When any first-difference feature is
/// selected the first grid point is dropped rather than padded.
FeatureMatrix build_features(const Dataset& ds, const FeatureSpec& spec);

/// CSV export: feature columns plus an `occupants` label column.
std::string feature_matrix_csv(const FeatureMatrix& fm);

}  // namespace occdet
