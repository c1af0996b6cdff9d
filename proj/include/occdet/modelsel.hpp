#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "occdet/eval.hpp"
#include "occdet/features.hpp"
#include "occdet/svm.hpp"
#include "occdet/timeutil.hpp"
#include "occdet/types.hpp"

namespace occdet {

/// Search grid over integer exponents of 2 for C and gamma. When the best
/// cell lands on a range boundary the range grows by expansion_step, at most
/// max_expansions times. gamma never drops below gamma_floor_exp.
struct GridSpec {
    int c_lo_exp = -10;
    int c_hi_exp = 10;
    int g_lo_exp = -10;
    int g_hi_exp = 10;
    int gamma_floor_exp = -10;
    int expansion_step = 2;
    int max_expansions = 5;
};

void validate(const GridSpec& g);

struct GridCell {
    int c_exp = 0;
    int g_exp = 0;
    double score = 0.0;
};

struct CvResult {
    std::vector<GridCell> cells;  // every evaluated cell, canonical order
    int chosen_c_exp = 0;
    int chosen_g_exp = 0;
    double best_score = 0.0;
    int expansions = 0;
    bool hit_expansion_limit = false;
};

/// Stratified k folds: per-fold class counts within one of the global split
/// and fold sizes differing by at most one.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int k,
                                                    const std::vector<int>& y,
                                                    std::uint64_t seed);

/// Core of the grid search, parameterized on the scoring function so the
/// expansion logic is testable on its own. Scores are reduced in canonical
/// cell order; ties prefer smaller C, then smaller gamma.
CvResult search_grid(const GridSpec& grid,
                     const std::function<double(int, int)>& score_cell,
                     Exec exec = Exec::parallel);

/// k-fold cross-validated accuracy over the exponent grid, training with the
/// problem's class weights at every cell.
CvResult grid_search(const Matrix& x, const std::vector<int>& y, const GridSpec& grid,
                     int k, std::uint64_t seed, const SmoOptions& opts = {},
                     Exec exec = Exec::parallel);

struct SplitPlan {
    int rounds = 3;
    double train_fraction = 0.6;
    std::uint64_t seed = 0;
    bool stratify_state = true;
    bool stratify_season = true;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::string> warnings;
};

/// Fresh stratified splits per round; round seeds derive from the plan seed.
std::vector<Split> make_splits(const std::vector<int>& occupants,
                               const std::vector<Season>& seasons, const SplitPlan& plan);

enum class Task { state, quantity };

std::string task_name(Task t);
Task task_from_name(const std::string& name);

struct RoundResult {
    MetricReport metrics;
    double chosen_c = 0.0;
    double chosen_gamma = 0.0;
    int chosen_c_exp = 0;
    int chosen_g_exp = 0;
    int expansions = 0;
    bool hit_expansion_limit = false;
    bool converged = true;
    std::vector<std::string> warnings;
    ImportanceReport importance;  // empty unless requested
};

struct Aggregate {
    double mean = 0.0;
    double sd = 0.0;
};

struct FeatureRun {
    std::vector<std::string> feature_names;
    Task task = Task::state;
    std::vector<RoundResult> rounds;
    Aggregate accuracy, precision, recall, f1, rmse, nrmse;
};

struct ExperimentOptions {
    SplitPlan plan;
    GridSpec grid;
    int cv_folds = 5;
    SmoOptions smo;
    bool compute_importance = false;
    int importance_repeats = 5;
    Exec exec = Exec::parallel;
};

/// The full per-feature-set protocol: per round, split, fit normalization on
/// the training rows, grid-search (C, gamma) by cross-validation, train the
/// final machine on the whole training split, evaluate on the held-out rows.
FeatureRun run_experiment(const Dataset& ds, const FeatureSpec& spec, Task task,
                          const ExperimentOptions& opts);

/// Final model trained on one round's training rows, with normalization and
/// feature names embedded; what the experiment command can save for later
/// importance runs.
SvmModel train_round_model(const Dataset& ds, const FeatureSpec& spec, Task task,
                           const ExperimentOptions& opts, int round);

std::vector<int> task_labels(const std::vector<int>& occupants, Task task);

}  // namespace occdet
