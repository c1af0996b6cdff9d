#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "occdet/svm.hpp"
#include "occdet/types.hpp"

namespace occdet {

double accuracy(const std::vector<int>& y, const std::vector<int>& yhat);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Per-class one-vs-rest precision/recall/F1, averaged with class-support
/// weights. F1 is 2PR/(P+R), zero when both parts vanish.
Prf weighted_prf1(const std::vector<int>& y, const std::vector<int>& yhat);

double rmse(const std::vector<int>& y, const std::vector<int>& yhat);

/// rmse divided by the largest ground-truth value; undefined (and an error)
/// when the ground truth is all zero.
double nrmse(const std::vector<int>& y, const std::vector<int>& yhat);

struct MetricReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double rmse = 0.0;
    double nrmse = 0.0;
    std::map<int, std::size_t> support;
};

MetricReport evaluate(const std::vector<int>& y, const std::vector<int>& yhat);

/// Tie-aware ranks: equal values share the mean of the ranks they span.
std::vector<double> average_ranks(const std::vector<double>& v);

/// Spearman rank correlation: Pearson correlation of the average ranks.
/// Constant input on either side has no defined rank ordering -> error.
double srocc(const std::vector<double>& a, const std::vector<double>& b);

struct ImportanceReport {
    std::vector<std::string> features;
    std::vector<double> mean_drop;  // baseline accuracy minus permuted accuracy
    std::vector<double> sd;         // over repeats
    int n_repeats = 0;
    double baseline_accuracy = 0.0;
};

using BatchPredictor = std::function<std::vector<int>(const Matrix&)>;

/// Accuracy drop when one column is shuffled, averaged over n_repeats
/// independent permutations. Permutation seeds derive from
/// (seed, column, repeat), so results are reproducible and repeat-parallel.
ImportanceReport permutation_importance(const BatchPredictor& predict, const Matrix& x,
                                        const std::vector<int>& y,
                                        const std::vector<std::string>& feature_names,
                                        int n_repeats, std::uint64_t seed);

ImportanceReport permutation_importance(const SvmModel& model, const Matrix& x,
                                        const std::vector<int>& y, int n_repeats,
                                        std::uint64_t seed);

std::string importance_csv(const ImportanceReport& rep);

}  // namespace occdet
