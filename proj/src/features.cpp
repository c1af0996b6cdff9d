#include "occdet/features.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

namespace occdet {

std::string feature_name(Feature f) {
    switch (f) {
        case Feature::avg: return "AVG";
        case Feature::fd: return "FD";
        case Feature::vd: return "VD";
        case Feature::fdvd: return "FDVD";
        case Feature::hd: return "HD";
        case Feature::vent: return "VENT";
    }
    return {};
}

std::string feature_flag(Feature f) {
    std::string s = feature_name(f);
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
}

Feature feature_from_flag(const std::string& flag) {
    for (Feature f : kCanonicalFeatureOrder)
        if (feature_flag(f) == flag) return f;
    throw ValidationError("unknown feature '" + flag +
                          "' (valid: avg, fd, vd, fdvd, hd, vent)");
}

std::vector<Feature> parse_feature_set(const std::string& csv) {
    std::vector<Feature> kinds;
    std::string token;
    std::stringstream ss(csv);
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        kinds.push_back(feature_from_flag(token));
    }
    if (kinds.empty()) throw ValidationError("empty feature set");
    return kinds;
}

bool FeatureSpec::has(Feature f) const {
    return std::find(kinds.begin(), kinds.end(), f) != kinds.end();
}

namespace {

// Horizontal proximity proxy: Euclidean in-room distance when both devices
// carry coordinates, |delta distance-to-window| otherwise.
double horizontal_distance(const DeviceMeta& a, const DeviceMeta& b) {
    if (a.x_m && a.y_m && b.x_m && b.y_m)
        return std::hypot(*a.x_m - *b.x_m, *a.y_m - *b.y_m);
    return std::abs(a.distance_to_window_m - b.distance_to_window_m);
}

// Lexicographic order on the sorted id pair, the deterministic tie-break.
std::pair<std::string, std::string> sorted_ids(const DeviceMeta& a, const DeviceMeta& b) {
    return a.device_id <= b.device_id ? std::make_pair(a.device_id, b.device_id)
                                      : std::make_pair(b.device_id, a.device_id);
}

}  // namespace

std::pair<std::string, std::string> select_vertical_pair(
    const std::vector<DeviceMeta>& devices) {
    if (devices.size() < 2)
        throw ValidationError("vertical pair selection needs at least 2 devices");
    const DeviceMeta* best_hi = nullptr;
    const DeviceMeta* best_lo = nullptr;
    double best_dist = 0.0;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        for (std::size_t j = i + 1; j < devices.size(); ++j) {
            const DeviceMeta& a = devices[i];
            const DeviceMeta& b = devices[j];
            if (std::abs(a.height_m - b.height_m) <= 1.0) continue;
            const double d = horizontal_distance(a, b);
            bool take = best_hi == nullptr;
            if (!take && d != best_dist) take = d < best_dist;
            if (!take && d == best_dist)
                take = sorted_ids(a, b) < sorted_ids(*best_hi, *best_lo);
            if (take) {
                best_dist = d;
                if (a.height_m >= b.height_m) {
                    best_hi = &a;
                    best_lo = &b;
                } else {
                    best_hi = &b;
                    best_lo = &a;
                }
            }
        }
    }
    if (!best_hi)
        throw ValidationError(
            "no vertical pair: no two devices differ by more than 1 m in height");
    return {best_hi->device_id, best_lo->device_id};
}

std::pair<std::string, std::string> select_horizontal_pair(
    const std::vector<DeviceMeta>& devices) {
    if (devices.size() < 2)
        throw ValidationError("horizontal pair selection needs at least 2 devices");
    double dmin = devices[0].distance_to_window_m, dmax = dmin;
    for (const auto& d : devices) {
        dmin = std::min(dmin, d.distance_to_window_m);
        dmax = std::max(dmax, d.distance_to_window_m);
    }
    if (dmin == dmax)
        throw ValidationError(
            "degenerate horizontal layout: all devices equally distant from the windows");

    // near must sit at the minimum window distance and far at the maximum;
    // among those combinations take the smallest height difference.
    const DeviceMeta* best_near = nullptr;
    const DeviceMeta* best_far = nullptr;
    double best_dh = 0.0;
    for (const auto& near : devices) {
        if (near.distance_to_window_m != dmin) continue;
        for (const auto& far : devices) {
            if (far.distance_to_window_m != dmax) continue;
            const double dh = std::abs(near.height_m - far.height_m);
            bool take = best_near == nullptr;
            if (!take && dh != best_dh) take = dh < best_dh;
            if (!take && dh == best_dh)
                take = sorted_ids(near, far) < sorted_ids(*best_near, *best_far);
            if (take) {
                best_dh = dh;
                best_near = &near;
                best_far = &far;
            }
        }
    }
    return {best_near->device_id, best_far->device_id};
}

FeatureSpec make_feature_spec(const std::vector<Feature>& kinds, const Dataset& ds) {
    FeatureSpec spec;
    for (Feature f : kCanonicalFeatureOrder)
        if (std::find(kinds.begin(), kinds.end(), f) != kinds.end()) spec.kinds.push_back(f);
    if (spec.kinds.empty()) throw ValidationError("empty feature set");

    if (spec.has(Feature::vd) || spec.has(Feature::fdvd))
        spec.vd_pair = select_vertical_pair(ds.room.devices);
    if (spec.has(Feature::hd)) spec.hd_pair = select_horizontal_pair(ds.room.devices);
    if (spec.has(Feature::vent) && !ds.has_ventilation())
        throw ValidationError("feature 'vent' requested but the dataset has no ventilation");
    return spec;
}

FeatureMatrix build_features(const Dataset& ds, const FeatureSpec& spec) {
    if (spec.kinds.empty()) throw ValidationError("empty feature set");
    if ((spec.has(Feature::vd) || spec.has(Feature::fdvd)) && !spec.vd_pair)
        throw ValidationError("vd/fdvd requested but no vertical pair resolved");
    if (spec.has(Feature::hd) && !spec.hd_pair)
        throw ValidationError("hd requested but no horizontal pair resolved");
    if (spec.has(Feature::vent) && !ds.has_ventilation())
        throw ValidationError("vent requested but the dataset has no ventilation");

    const std::size_t n = ds.grid.size();
    if (n == 0) throw ValidationError("empty dataset");

    auto series_of = [&](const std::string& id) -> const std::vector<double>& {
        auto it = ds.series.find(id);
        if (it == ds.series.end())
            throw ValidationError("device '" + id + "' not present in dataset");
        return it->second;
    };

    std::vector<double> avg(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double sum = 0.0;
        for (const auto& id : ds.device_order) sum += series_of(id)[t];
        avg[t] = sum / static_cast<double>(ds.device_order.size());
    }

    std::vector<double> vd;
    if (spec.vd_pair) {
        const auto& upper = series_of(spec.vd_pair->first);
        const auto& lower = series_of(spec.vd_pair->second);
        vd.resize(n);
        for (std::size_t t = 0; t < n; ++t) vd[t] = upper[t] - lower[t];
    }
    std::vector<double> hd;
    if (spec.hd_pair) {
        const auto& near = series_of(spec.hd_pair->first);
        const auto& far = series_of(spec.hd_pair->second);
        hd.resize(n);
        for (std::size_t t = 0; t < n; ++t) hd[t] = near[t] - far[t];
    }

    const bool drop_first = spec.needs_first_difference();
    if (drop_first && n < 2)
        throw ValidationError("first-difference features need at least 2 grid points");
    const std::size_t first = drop_first ? 1 : 0;
    const std::size_t rows = n - first;

    FeatureMatrix fm;
    for (Feature f : spec.kinds) fm.names.push_back(feature_name(f));
    fm.values = Matrix(rows, spec.kinds.size());
    fm.occupants.assign(ds.labels.begin() + static_cast<std::ptrdiff_t>(first),
                        ds.labels.end());
    fm.timestamps.assign(ds.grid.begin() + static_cast<std::ptrdiff_t>(first), ds.grid.end());

    for (std::size_t c = 0; c < spec.kinds.size(); ++c) {
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t t = r + first;
            double v = 0.0;
            switch (spec.kinds[c]) {
                case Feature::avg: v = avg[t]; break;
                case Feature::fd: v = avg[t] - avg[t - 1]; break;
                case Feature::vd: v = vd[t]; break;
                case Feature::fdvd: v = vd[t] - vd[t - 1]; break;
                case Feature::hd: v = hd[t]; break;
                case Feature::vent: v = ds.ventilation[t]; break;
            }
            fm.values.at(r, c) = v;
        }
    }
    return fm;
}

std::string feature_matrix_csv(const FeatureMatrix& fm) {
    std::string out;
    for (const auto& name : fm.names) {
        out += name;
        out += ',';
    }
    out += "occupants\n";
    char buf[32];
    for (std::size_t r = 0; r < fm.values.rows(); ++r) {
        for (std::size_t c = 0; c < fm.values.cols(); ++c) {
            auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), fm.values.at(r, c));
            out.append(buf, p);
            out += ',';
        }
        out += std::to_string(fm.occupants[r]);
        out += '\n';
    }
    return out;
}

}  // namespace occdet
