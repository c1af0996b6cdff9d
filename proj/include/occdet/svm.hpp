#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "occdet/kernels.hpp"
#include "occdet/types.hpp"

namespace occdet {

struct KernelParams {
    double gamma = 1.0;  // RBF width, > 0
    double c = 1.0;      // soft-margin penalty, > 0
};

void validate(const KernelParams& p);

/// n/(k * n_c) for each of the k observed classes; rebalances the per-sample
/// penalty so sparse classes are not drowned out.
std::map<int, double> balanced_weights(const std::vector<int>& y);

struct TrainingProblem {
    Matrix x;
    std::vector<int> y;
    std::map<int, double> weights;  // class -> box multiplier

    static TrainingProblem balanced(Matrix x, std::vector<int> y);
};

struct SmoOptions {
    double tol = 1e-3;
    // Iteration budget expressed as kernel evaluations; one SMO step costs
    // about 2n of them.
    std::uint64_t max_kernel_evals = 10'000'000;
    std::size_t cache_bytes = 64ull << 20;
};

/// One trained class pair. coef[i] = alpha_i * y_i for the retained support
/// vectors; decision f(x) = sum coef_i K(sv_i, x) + bias, f >= 0 votes for
/// class_pos.
struct BinaryModel {
    int class_pos = 0;
    int class_neg = 0;
    Matrix support_vectors;
    std::vector<double> coef;
    double bias = 0.0;
    double dual_objective = 0.0;
    bool converged = true;
    std::uint64_t iterations = 0;
};

/// Train a weighted two-class C-SVC by sequential minimal optimization with
/// maximal-violating-pair working-set selection. Exceeding the iteration
/// budget returns the best iterate with converged = false.
BinaryModel train_binary(const TrainingProblem& problem, const KernelParams& params,
                         const SmoOptions& opts = {});

struct SvmModel {
    KernelParams params;
    std::vector<int> classes;  // sorted
    std::vector<BinaryModel> pairs;
    std::vector<std::string> feature_names;
    NormStats norm;
};

/// One-vs-one composition over every class pair; prediction by majority vote
/// with ties resolved toward the smallest label.
SvmModel train_multiclass(const TrainingProblem& problem, const KernelParams& params,
                          const SmoOptions& opts = {});

double decision_value(const BinaryModel& m, double gamma, std::span<const double> x);

int predict(const SvmModel& model, std::span<const double> x);

std::vector<int> predict_batch(const SvmModel& model, const Matrix& x,
                               Exec exec = Exec::parallel);

}  // namespace occdet
