#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occdet/types.hpp"

namespace occdet {

/// Mean of the readings that are present; kMissing when both are absent.
double pair_average(double a, double b);

/// Replace every missing point with the temporally nearest present one;
/// distance ties go to the earlier point. Throws DegenerateError when the
/// whole series is missing.
std::vector<double> fill_missing(const std::vector<double>& series,
                                 const std::string& device_id = {});

/// Mean-bin a series from its native interval onto target_interval, which
/// must be a positive multiple of it. A short trailing bin averages over the
/// points it has.
std::vector<double> aggregate(const std::vector<double>& series,
                              std::int64_t native_interval_s,
                              std::int64_t target_interval_s);

/// Coarsen a whole dataset: series are bin means; labels and ventilation take
/// the value at each bin's start timestamp.
Dataset aggregate_dataset(const Dataset& ds, std::int64_t target_interval_s);

/// Per-column min/max over the given rows only.
NormStats fit_norm_stats(const Matrix& m, const std::vector<std::size_t>& rows,
                         const std::string& source);

/// x -> (x-min)/(max-min) per column; constant columns map to 0. Values
/// outside the fitted range pass through the affine map unclamped.
Matrix normalize(const Matrix& m, const NormStats& stats);

/// Inverse affine map, for round-trip checks.
Matrix denormalize(const Matrix& m, const NormStats& stats);

struct LabelRow {
    std::int64_t timestamp = 0;
    int occupants = 0;
    double ventilation = kMissing;
};

/// Combine raw samples with the label grid into a gap-filled Dataset.
/// The label timestamps are authoritative: they define the uniform grid.
Dataset build_dataset(const std::vector<RawSample>& samples,
                      const std::vector<LabelRow>& labels, const RoomInfo& room);

}  // namespace occdet
