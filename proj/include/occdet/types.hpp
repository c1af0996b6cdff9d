#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace occdet {

/// Input or configuration problem: bad file, bad flag, violated precondition.
/// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Data is structurally fine but unusable for the requested computation
/// (e.g. a single-class label vector). CLI exit code 3.
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Dense row-major matrix of doubles. Feature rows, support vectors,
/// kernel blocks -- everything numeric in this project is one of these.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// New matrix holding the given rows, in the given order.
    Matrix select_rows(std::span<const std::size_t> idx) const {
        Matrix out(idx.size(), cols_);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            auto src = row(idx[i]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }

    bool operator==(const Matrix& o) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// One measurement device: id plus the installation facts the pair-selection
/// rules need. Optional in-room coordinates refine horizontal distances when
/// available.
struct DeviceMeta {
    std::string device_id;
    double height_m = 0.0;
    double distance_to_window_m = 0.0;
    std::string position;
    std::optional<double> x_m;
    std::optional<double> y_m;
};

struct RoomInfo {
    std::string room_id;
    double length_m = 0.0;
    double width_m = 0.0;
    double height_m = 0.0;
    std::vector<DeviceMeta> devices;
};

/// One raw CSV row: a device reports up to two co-located sensors.
/// kMissing marks an absent reading.
struct RawSample {
    std::int64_t timestamp = 0;
    std::string device_id;
    double co2_a = kMissing;
    double co2_b = kMissing;
};

/// Time-aligned per-device series plus labels on one uniform grid.
/// After ingest no series contains missing values.
struct Dataset {
    std::vector<std::int64_t> grid;  // unix seconds, uniform spacing
    std::int64_t interval_s = 0;
    std::vector<std::string> device_order;
    std::map<std::string, std::vector<double>> series;  // device -> ppm
    std::vector<int> labels;                            // occupant count
    std::vector<double> ventilation;                    // empty when absent
    RoomInfo room;

    bool has_ventilation() const { return !ventilation.empty(); }
    std::size_t size() const { return grid.size(); }
};

/// Per-column min/max fitted on a training split.
struct NormStats {
    std::vector<double> min;
    std::vector<double> max;
    std::string source;
};

}  // namespace occdet
