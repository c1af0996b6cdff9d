#pragma once

#include <span>

#include "occdet/types.hpp"

namespace occdet {

/// Execution policy for the data-parallel kernels. Every parallel kernel has
/// a serial twin that computes bitwise-identical results; the OpenMP variants
/// only parallelize across independent output elements and never reorder
/// per-element reductions, so Exec changes speed, not bytes.
enum class Exec { serial, parallel };

/// exp(-gamma * ||x - z||^2). gamma must be positive.
double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma);

/// out[j] = rbf(X.row(j), z). Serial inner loop, used by the SMO solver.
void rbf_kernel_row(const Matrix& x, std::span<const double> z, double gamma,
                    std::span<double> out);

/// Full |A| x |B| kernel block.
Matrix rbf_kernel_matrix(const Matrix& a, const Matrix& b, double gamma,
                         Exec exec = Exec::parallel);
Matrix rbf_kernel_matrix_serial(const Matrix& a, const Matrix& b, double gamma);

/// out[i] = sum_j coef[j] * rbf(sv.row(j), query.row(i)) + bias.
/// Parallel over query rows; the inner sum runs in index order on every path.
void decision_values(const Matrix& sv, std::span<const double> coef, double bias,
                     double gamma, const Matrix& query, std::span<double> out,
                     Exec exec = Exec::parallel);
void decision_values_serial(const Matrix& sv, std::span<const double> coef, double bias,
                            double gamma, const Matrix& query, std::span<double> out);

}  // namespace occdet
