#include "occdet/kernels.hpp"

#include <cmath>
#include <cstdint>

namespace occdet {

namespace {

double sq_dist(std::span<const double> x, std::span<const double> z) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - z[i];
        s += d * d;
    }
    return s;
}

}  // namespace

double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma) {
    if (!(gamma > 0.0)) throw ValidationError("rbf kernel requires gamma > 0");
    if (x.size() != z.size()) throw ValidationError("rbf kernel: dimension mismatch");
    return std::exp(-gamma * sq_dist(x, z));
}

void rbf_kernel_row(const Matrix& x, std::span<const double> z, double gamma,
                    std::span<double> out) {
    for (std::size_t j = 0; j < x.rows(); ++j)
        out[j] = std::exp(-gamma * sq_dist(x.row(j), z));
}

Matrix rbf_kernel_matrix_serial(const Matrix& a, const Matrix& b, double gamma) {
    Matrix k(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto row = k.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j)
            row[j] = std::exp(-gamma * sq_dist(a.row(i), b.row(j)));
    }
    return k;
}

Matrix rbf_kernel_matrix(const Matrix& a, const Matrix& b, double gamma, Exec exec) {
    if (!(gamma > 0.0)) throw ValidationError("rbf kernel requires gamma > 0");
    if (a.cols() != b.cols()) throw ValidationError("rbf kernel: dimension mismatch");
    if (exec == Exec::serial) return rbf_kernel_matrix_serial(a, b, gamma);

    Matrix k(a.rows(), b.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.rows()); ++i) {
        auto row = k.row(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < b.rows(); ++j)
            row[j] = std::exp(-gamma * sq_dist(a.row(static_cast<std::size_t>(i)), b.row(j)));
    }
    return k;
}

void decision_values_serial(const Matrix& sv, std::span<const double> coef, double bias,
                            double gamma, const Matrix& query, std::span<double> out) {
    for (std::size_t i = 0; i < query.rows(); ++i) {
        double f = bias;
        for (std::size_t j = 0; j < sv.rows(); ++j)
            f += coef[j] * std::exp(-gamma * sq_dist(sv.row(j), query.row(i)));
        out[i] = f;
    }
}

void decision_values(const Matrix& sv, std::span<const double> coef, double bias,
                     double gamma, const Matrix& query, std::span<double> out, Exec exec) {
    if (sv.cols() != query.cols())
        throw ValidationError("decision_values: dimension mismatch");
    if (exec == Exec::serial) {
        decision_values_serial(sv, coef, bias, gamma, query, out);
        return;
    }
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(query.rows()); ++i) {
        double f = bias;
        for (std::size_t j = 0; j < sv.rows(); ++j)
            f += coef[j] *
                 std::exp(-gamma * sq_dist(sv.row(j), query.row(static_cast<std::size_t>(i))));
        out[static_cast<std::size_t>(i)] = f;
    }
}

}  // namespace occdet
