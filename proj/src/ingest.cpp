#include "occdet/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "occdet/timeutil.hpp"

namespace occdet {

double pair_average(double a, double b) {
    const bool ma = is_missing(a), mb = is_missing(b);
    if (ma && mb) return kMissing;
    if (ma) return b;
    if (mb) return a;
    return 0.5 * (a + b);
}

std::vector<double> fill_missing(const std::vector<double>& series,
                                 const std::string& device_id) {
    const std::size_t n = series.size();
    std::vector<double> out(series);

    // prev[i]: index of the nearest present point at or before i; next[i] likewise after.
    constexpr std::ptrdiff_t none = -1;
    std::vector<std::ptrdiff_t> prev(n, none), next(n, none);
    std::ptrdiff_t last = none;
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_missing(series[i])) last = static_cast<std::ptrdiff_t>(i);
        prev[i] = last;
    }
    last = none;
    for (std::size_t i = n; i-- > 0;) {
        if (!is_missing(series[i])) last = static_cast<std::ptrdiff_t>(i);
        next[i] = last;
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (!is_missing(series[i])) continue;
        const std::ptrdiff_t p = prev[i], q = next[i];
        if (p == none && q == none)
            throw DegenerateError("fill_missing: series is entirely missing" +
                                  (device_id.empty() ? std::string{}
                                                     : " for device '" + device_id + "'"));
        if (p == none) {
            out[i] = series[static_cast<std::size_t>(q)];
        } else if (q == none) {
            out[i] = series[static_cast<std::size_t>(p)];
        } else {
            const auto dp = static_cast<std::ptrdiff_t>(i) - p;
            const auto dq = q - static_cast<std::ptrdiff_t>(i);
            // tie -> earlier point
            out[i] = series[static_cast<std::size_t>(dp <= dq ? p : q)];
        }
    }
    return out;
}

std::vector<double> aggregate(const std::vector<double>& series,
                              std::int64_t native_interval_s,
                              std::int64_t target_interval_s) {
    if (native_interval_s <= 0 || target_interval_s <= 0 ||
        target_interval_s % native_interval_s != 0)
        throw ValidationError("aggregate: target interval " +
                              std::to_string(target_interval_s) +
                              "s is not a positive multiple of the native interval " +
                              std::to_string(native_interval_s) + "s");
    const std::size_t bin = static_cast<std::size_t>(target_interval_s / native_interval_s);
    std::vector<double> out;
    out.reserve((series.size() + bin - 1) / bin);
    for (std::size_t start = 0; start < series.size(); start += bin) {
        const std::size_t end = std::min(start + bin, series.size());
        double sum = 0.0;
        for (std::size_t i = start; i < end; ++i) sum += series[i];
        out.push_back(sum / static_cast<double>(end - start));
    }
    return out;
}

Dataset aggregate_dataset(const Dataset& ds, std::int64_t target_interval_s) {
    if (target_interval_s == ds.interval_s) return ds;
    if (ds.interval_s <= 0 || target_interval_s <= 0 ||
        target_interval_s % ds.interval_s != 0)
        throw ValidationError("aggregate: target interval " +
                              std::to_string(target_interval_s) +
                              "s is not a positive multiple of the native interval " +
                              std::to_string(ds.interval_s) + "s");
    Dataset out;
    out.room = ds.room;
    out.device_order = ds.device_order;
    out.interval_s = target_interval_s;

    // Bins anchor on absolute time, so day or season gaps in the grid never
    // smear into one bin. Labels and ventilation take the bin's first point.
    std::vector<std::pair<std::size_t, std::size_t>> bins;  // [begin, end) grid ranges
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= ds.grid.size(); ++i) {
        if (i == ds.grid.size() ||
            ds.grid[i] / target_interval_s != ds.grid[begin] / target_interval_s) {
            bins.emplace_back(begin, i);
            begin = i;
        }
    }
    for (const auto& [b, e] : bins) {
        out.grid.push_back(ds.grid[b]);
        out.labels.push_back(ds.labels[b]);
        if (ds.has_ventilation()) out.ventilation.push_back(ds.ventilation[b]);
    }
    for (const auto& [id, s] : ds.series) {
        std::vector<double> coarse;
        coarse.reserve(bins.size());
        for (const auto& [b, e] : bins) {
            double sum = 0.0;
            for (std::size_t i = b; i < e; ++i) sum += s[i];
            coarse.push_back(sum / static_cast<double>(e - b));
        }
        out.series.emplace(id, std::move(coarse));
    }
    return out;
}

NormStats fit_norm_stats(const Matrix& m, const std::vector<std::size_t>& rows,
                         const std::string& source) {
    if (rows.empty()) throw ValidationError("fit_norm_stats: no rows");
    NormStats st;
    st.source = source;
    st.min.assign(m.cols(), std::numeric_limits<double>::infinity());
    st.max.assign(m.cols(), -std::numeric_limits<double>::infinity());
    for (std::size_t r : rows) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            st.min[c] = std::min(st.min[c], row[c]);
            st.max[c] = std::max(st.max[c], row[c]);
        }
    }
    return st;
}

Matrix normalize(const Matrix& m, const NormStats& stats) {
    if (stats.min.size() != m.cols())
        throw ValidationError("normalize: stats fitted for " +
                              std::to_string(stats.min.size()) + " columns, matrix has " +
                              std::to_string(m.cols()));
    Matrix out(m.rows(), m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) {
        const double lo = stats.min[c];
        const double range = stats.max[c] - lo;
        for (std::size_t r = 0; r < m.rows(); ++r)
            out.at(r, c) = range == 0.0 ? 0.0 : (m.at(r, c) - lo) / range;
    }
    return out;
}

Matrix denormalize(const Matrix& m, const NormStats& stats) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) {
        const double lo = stats.min[c];
        const double range = stats.max[c] - lo;
        for (std::size_t r = 0; r < m.rows(); ++r)
            out.at(r, c) = range == 0.0 ? lo : m.at(r, c) * range + lo;
    }
    return out;
}

Dataset build_dataset(const std::vector<RawSample>& samples,
                      const std::vector<LabelRow>& labels, const RoomInfo& room) {
    if (labels.size() < 2)
        throw ValidationError("label grid needs at least 2 rows");

    Dataset ds;
    ds.room = room;
    // The native interval is the smallest spacing; wider gaps (nights,
    // weekends, season breaks) are allowed but must be whole multiples of it.
    ds.interval_s = std::numeric_limits<std::int64_t>::max();
    for (std::size_t i = 1; i < labels.size(); ++i) {
        const std::int64_t diff = labels[i].timestamp - labels[i - 1].timestamp;
        if (diff <= 0)
            throw ValidationError("label timestamps must be strictly increasing at row " +
                                  std::to_string(i + 1));
        ds.interval_s = std::min(ds.interval_s, diff);
    }
    ds.grid.reserve(labels.size());
    ds.labels.reserve(labels.size());
    std::size_t vent_present = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i > 0 &&
            (labels[i].timestamp - labels[i - 1].timestamp) % ds.interval_s != 0)
            throw ValidationError("label grid is not aligned to the " +
                                  std::to_string(ds.interval_s) + "s interval at row " +
                                  std::to_string(i + 1) + " (" +
                                  format_iso8601_utc(labels[i].timestamp) + ")");
        if (labels[i].occupants < 0)
            throw ValidationError("occupants must be non-negative at " +
                                  format_iso8601_utc(labels[i].timestamp));
        ds.grid.push_back(labels[i].timestamp);
        ds.labels.push_back(labels[i].occupants);
        if (!is_missing(labels[i].ventilation)) ++vent_present;
    }
    if (vent_present > 0) {
        if (vent_present != labels.size())
            throw ValidationError("ventilation column is partially filled (" +
                                  std::to_string(vent_present) + " of " +
                                  std::to_string(labels.size()) + " rows)");
        ds.ventilation.reserve(labels.size());
        for (const auto& l : labels) {
            if (l.ventilation < 0.0 || l.ventilation > 1.0)
                throw ValidationError("ventilation rating outside [0,1] at " +
                                      format_iso8601_utc(l.timestamp));
            ds.ventilation.push_back(l.ventilation);
        }
    }

    for (const auto& dev : room.devices) ds.device_order.push_back(dev.device_id);
    std::map<std::string, std::vector<double>> sums;
    std::map<std::string, std::vector<int>> counts;
    for (const auto& id : ds.device_order) {
        sums[id].assign(ds.grid.size(), 0.0);
        counts[id].assign(ds.grid.size(), 0);
    }

    std::map<std::string, std::int64_t> last_ts;
    for (const auto& s : samples) {
        auto it = sums.find(s.device_id);
        if (it == sums.end())
            throw ValidationError("sensor sample for unknown device '" + s.device_id + "'");
        auto [lit, inserted] = last_ts.try_emplace(s.device_id, s.timestamp);
        if (!inserted) {
            if (s.timestamp < lit->second)
                throw ValidationError("timestamps go backwards for device '" + s.device_id +
                                      "' at " + format_iso8601_utc(s.timestamp));
            lit->second = s.timestamp;
        }
        const double v = pair_average(s.co2_a, s.co2_b);
        if (is_missing(v)) continue;
        if (v < 0.0 || v > 50000.0)
            throw ValidationError("co2 reading outside [0, 50000] ppm for device '" +
                                  s.device_id + "' at " + format_iso8601_utc(s.timestamp));
        // Snap to the nearest grid point; samples falling in gaps or outside
        // the grid are dropped.
        const auto after =
            std::lower_bound(ds.grid.begin(), ds.grid.end(), s.timestamp);
        std::size_t u = ds.grid.size();
        if (after != ds.grid.end() && *after - s.timestamp <= ds.interval_s / 2)
            u = static_cast<std::size_t>(after - ds.grid.begin());
        else if (after != ds.grid.begin() &&
                 s.timestamp - *std::prev(after) <= ds.interval_s / 2)
            u = static_cast<std::size_t>(std::prev(after) - ds.grid.begin());
        if (u == ds.grid.size()) continue;
        it->second[u] += v;
        counts[s.device_id][u] += 1;
    }

    for (const auto& id : ds.device_order) {
        std::vector<double> series(ds.grid.size(), kMissing);
        for (std::size_t i = 0; i < series.size(); ++i)
            if (counts[id][i] > 0) series[i] = sums[id][i] / counts[id][i];
        ds.series.emplace(id, fill_missing(series, id));
    }
    return ds;
}

}  // namespace occdet
