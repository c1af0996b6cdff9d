#include "occdet/modelsel.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <set>

#include "occdet/ingest.hpp"
#include "occdet/rng.hpp"

namespace occdet {

void validate(const GridSpec& g) {
    if (g.c_lo_exp > g.c_hi_exp || g.g_lo_exp > g.g_hi_exp)
        throw ValidationError("grid: exponent range lo > hi");
    if (g.expansion_step < 1) throw ValidationError("grid: expansion_step must be >= 1");
    if (g.max_expansions < 0) throw ValidationError("grid: max_expansions must be >= 0");
    if (g.g_lo_exp < g.gamma_floor_exp)
        throw ValidationError("grid: gamma range below the gamma floor");
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int k,
                                                    const std::vector<int>& y,
                                                    std::uint64_t seed) {
    if (k < 1) throw ValidationError("kfold: k must be >= 1");
    if (static_cast<std::size_t>(k) > n)
        throw ValidationError("kfold: k = " + std::to_string(k) + " exceeds n = " +
                              std::to_string(n));
    if (y.size() != n) throw ValidationError("kfold: label length mismatch");

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[y[i]].push_back(i);

    rng::Engine eng(rng::derive(seed, 0x6b666f6cULL));
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    std::vector<std::size_t> load(static_cast<std::size_t>(k), 0);

    for (auto& [cls, idx] : by_class) {
        rng::shuffle(idx, eng);
        const std::size_t base = idx.size() / static_cast<std::size_t>(k);
        std::size_t next = 0;
        for (std::size_t f = 0; f < folds.size(); ++f)
            for (std::size_t t = 0; t < base; ++t) {
                folds[f].push_back(idx[next++]);
                ++load[f];
            }
        // remainder: one at a time to the currently lightest fold
        while (next < idx.size()) {
            std::size_t target = 0;
            for (std::size_t f = 1; f < folds.size(); ++f)
                if (load[f] < load[target]) target = f;
            folds[target].push_back(idx[next++]);
            ++load[target];
        }
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

CvResult search_grid(const GridSpec& grid, const std::function<double(int, int)>& score_cell,
                     Exec exec) {
    validate(grid);
    int c_lo = grid.c_lo_exp, c_hi = grid.c_hi_exp;
    int g_lo = grid.g_lo_exp, g_hi = grid.g_hi_exp;

    std::map<std::pair<int, int>, double> scores;
    CvResult result;

    auto evaluate_pending = [&] {
        std::vector<std::pair<int, int>> todo;
        for (int ci = c_lo; ci <= c_hi; ++ci)
            for (int gi = g_lo; gi <= g_hi; ++gi)
                if (!scores.count({ci, gi})) todo.emplace_back(ci, gi);

        std::vector<double> vals(todo.size());
        std::exception_ptr error;
        if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
            for (std::int64_t t = 0; t < static_cast<std::int64_t>(todo.size()); ++t) {
                try {
                    const auto [ci, gi] = todo[static_cast<std::size_t>(t)];
                    vals[static_cast<std::size_t>(t)] = score_cell(ci, gi);
                } catch (...) {
#pragma omp critical
                    if (!error) error = std::current_exception();
                }
            }
        } else {
            for (std::size_t t = 0; t < todo.size(); ++t) {
                const auto [ci, gi] = todo[t];
                vals[t] = score_cell(ci, gi);
            }
        }
        if (error) std::rethrow_exception(error);
        for (std::size_t t = 0; t < todo.size(); ++t) scores[todo[t]] = vals[t];
    };
    // argmax in canonical (C, gamma) order; ties keep the earlier cell
    auto argmax = [&scores] {
        auto best = scores.begin();
        for (auto it = std::next(scores.begin()); it != scores.end(); ++it)
            if (it->second > best->second) best = it;
        return best;
    };

    evaluate_pending();
    while (true) {
        const auto best = argmax();
        result.chosen_c_exp = best->first.first;
        result.chosen_g_exp = best->first.second;
        result.best_score = best->second;

        const bool at_c_lo = best->first.first == c_lo;
        const bool at_c_hi = best->first.first == c_hi;
        const bool at_g_lo = best->first.second == g_lo && g_lo > grid.gamma_floor_exp;
        const bool at_g_hi = best->first.second == g_hi;
        if (!(at_c_lo || at_c_hi || at_g_lo || at_g_hi)) break;
        if (result.expansions >= grid.max_expansions) {
            result.hit_expansion_limit = true;
            break;
        }
        if (at_c_lo) c_lo -= grid.expansion_step;
        if (at_c_hi) c_hi += grid.expansion_step;
        if (at_g_lo) g_lo = std::max(grid.gamma_floor_exp, g_lo - grid.expansion_step);
        if (at_g_hi) g_hi += grid.expansion_step;
        ++result.expansions;
        evaluate_pending();

        // an expansion that fails to strictly improve confirms the optimum:
        // keep the pre-expansion choice so constant scores stay on the
        // original grid's smallest cell
        if (argmax()->second <= result.best_score) break;
    }

    result.cells.reserve(scores.size());
    for (const auto& [cell, score] : scores)
        result.cells.push_back({cell.first, cell.second, score});
    return result;
}

CvResult grid_search(const Matrix& x, const std::vector<int>& y, const GridSpec& grid,
                     int k, std::uint64_t seed, const SmoOptions& opts, Exec exec) {
    const auto folds = kfold_indices(x.rows(), k, y, seed);

    // Precompute fold train/test row sets once; cells reuse them.
    struct FoldData {
        Matrix x_train, x_test;
        std::vector<int> y_train, y_test;
    };
    std::vector<FoldData> fold_data;
    fold_data.reserve(folds.size());
    for (std::size_t f = 0; f < folds.size(); ++f) {
        FoldData fd;
        std::vector<std::size_t> train;
        for (std::size_t g = 0; g < folds.size(); ++g)
            if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
        std::sort(train.begin(), train.end());
        fd.x_train = x.select_rows(train);
        fd.x_test = x.select_rows(folds[f]);
        for (std::size_t i : train) fd.y_train.push_back(y[i]);
        for (std::size_t i : folds[f]) fd.y_test.push_back(y[i]);
        fold_data.push_back(std::move(fd));
    }

    auto score_cell = [&](int c_exp, int g_exp) {
        const KernelParams params{std::ldexp(1.0, g_exp), std::ldexp(1.0, c_exp)};
        double sum = 0.0;
        for (const auto& fd : fold_data) {
            const auto model = train_multiclass(
                TrainingProblem::balanced(fd.x_train, fd.y_train), params, opts);
            sum += accuracy(fd.y_test, predict_batch(model, fd.x_test, Exec::serial));
        }
        return sum / static_cast<double>(fold_data.size());
    };
    return search_grid(grid, score_cell, exec);
}

std::vector<Split> make_splits(const std::vector<int>& occupants,
                               const std::vector<Season>& seasons, const SplitPlan& plan) {
    if (plan.rounds < 1) throw ValidationError("split plan: rounds must be >= 1");
    if (!(plan.train_fraction > 0.0 && plan.train_fraction < 1.0))
        throw ValidationError("split plan: train_fraction must be in (0,1)");
    const std::size_t n = occupants.size();
    if (n < 2) throw ValidationError("split plan: need at least 2 rows");
    if (seasons.size() != n) throw ValidationError("split plan: season length mismatch");

    std::vector<std::string> warnings;
    bool use_state = plan.stratify_state;
    bool use_season = plan.stratify_season;
    if (use_season) {
        const bool has_w = std::any_of(seasons.begin(), seasons.end(),
                                       [](Season s) { return s == Season::winter; });
        const bool has_s = std::any_of(seasons.begin(), seasons.end(),
                                       [](Season s) { return s == Season::summer; });
        if (!(has_w && has_s)) {
            use_season = false;
            warnings.push_back("only one season present; stratifying without season");
        }
    }
    if (use_state) {
        const bool has_occ =
            std::any_of(occupants.begin(), occupants.end(), [](int o) { return o > 0; });
        const bool has_empty =
            std::any_of(occupants.begin(), occupants.end(), [](int o) { return o == 0; });
        if (!(has_occ && has_empty)) {
            use_state = false;
            warnings.push_back("only one occupancy state present; stratifying without state");
        }
    }

    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < n; ++i) {
        const int key = (use_state && occupants[i] > 0 ? 2 : 0) +
                        (use_season && seasons[i] == Season::summer ? 1 : 0);
        strata[key].push_back(i);
    }

    std::vector<Split> out;
    out.reserve(static_cast<std::size_t>(plan.rounds));
    for (int r = 0; r < plan.rounds; ++r) {
        rng::Engine eng(rng::derive(plan.seed, static_cast<std::uint64_t>(r), 0x73706c69ULL));
        Split split;
        split.warnings = warnings;
        for (auto& [key, members] : strata) {
            std::vector<std::size_t> idx = members;
            rng::shuffle(idx, eng);
            std::size_t n_train;
            if (idx.size() == 1) {
                n_train = 1;  // lone row goes to train so no class evaporates there
            } else {
                n_train = static_cast<std::size_t>(
                    std::floor(plan.train_fraction * static_cast<double>(idx.size()) + 0.5));
                n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
            }
            split.train.insert(split.train.end(), idx.begin(),
                               idx.begin() + static_cast<std::ptrdiff_t>(n_train));
            split.test.insert(split.test.end(),
                              idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
        }
        std::sort(split.train.begin(), split.train.end());
        std::sort(split.test.begin(), split.test.end());
        out.push_back(std::move(split));
    }
    return out;
}

std::string task_name(Task t) { return t == Task::state ? "state" : "quantity"; }

Task task_from_name(const std::string& name) {
    if (name == "state") return Task::state;
    if (name == "quantity") return Task::quantity;
    throw ValidationError("unknown task '" + name + "' (valid: state, quantity)");
}

std::vector<int> task_labels(const std::vector<int>& occupants, Task task) {
    std::vector<int> labels(occupants.size());
    for (std::size_t i = 0; i < occupants.size(); ++i)
        labels[i] = task == Task::state ? (occupants[i] > 0 ? 1 : 0) : occupants[i];
    return labels;
}

namespace {

struct RoundOutput {
    RoundResult result;
    SvmModel model;
};

RoundOutput run_round(const FeatureMatrix& fm, const std::vector<int>& labels,
                      const Split& split, int round, const ExperimentOptions& opts) {
    RoundOutput out;
    out.result.warnings = split.warnings;

    const NormStats norm = fit_norm_stats(
        fm.values, split.train, "round" + std::to_string(round) + "-train");
    const Matrix x = normalize(fm.values, norm);
    const Matrix x_train = x.select_rows(split.train);
    const Matrix x_test = x.select_rows(split.test);
    std::vector<int> y_train, y_test;
    for (std::size_t i : split.train) y_train.push_back(labels[i]);
    for (std::size_t i : split.test) y_test.push_back(labels[i]);

    const std::uint64_t fold_seed =
        rng::derive(opts.plan.seed, static_cast<std::uint64_t>(round), 0x666f6c64ULL);
    const CvResult cv =
        grid_search(x_train, y_train, opts.grid, opts.cv_folds, fold_seed, opts.smo, opts.exec);

    const KernelParams params{std::ldexp(1.0, cv.chosen_g_exp),
                              std::ldexp(1.0, cv.chosen_c_exp)};
    out.model = train_multiclass(TrainingProblem::balanced(x_train, y_train), params,
                                 opts.smo);
    out.model.feature_names = fm.names;
    out.model.norm = norm;

    const std::vector<int> y_hat = predict_batch(out.model, x_test, opts.exec);
    out.result.metrics = evaluate(y_test, y_hat);
    out.result.chosen_c = params.c;
    out.result.chosen_gamma = params.gamma;
    out.result.chosen_c_exp = cv.chosen_c_exp;
    out.result.chosen_g_exp = cv.chosen_g_exp;
    out.result.expansions = cv.expansions;
    out.result.hit_expansion_limit = cv.hit_expansion_limit;
    out.result.converged = std::all_of(out.model.pairs.begin(), out.model.pairs.end(),
                                       [](const BinaryModel& b) { return b.converged; });
    if (opts.compute_importance) {
        const std::uint64_t imp_seed =
            rng::derive(opts.plan.seed, static_cast<std::uint64_t>(round), 0x696d7074ULL);
        out.result.importance = permutation_importance(out.model, x_test, y_test,
                                                       opts.importance_repeats, imp_seed);
    }
    return out;
}

Aggregate aggregate_of(const std::vector<RoundResult>& rounds,
                       double MetricReport::* field) {
    Aggregate a;
    const double n = static_cast<double>(rounds.size());
    for (const auto& r : rounds) a.mean += r.metrics.*field;
    a.mean /= n;
    for (const auto& r : rounds) {
        const double d = r.metrics.*field - a.mean;
        a.sd += d * d;
    }
    a.sd = std::sqrt(a.sd / n);
    return a;
}

void check_two_classes(const std::vector<int>& labels, Task task) {
    const std::set<int> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2)
        throw DegenerateError("experiment: single class in " + task_name(task) + " labels");
}

}  // namespace

FeatureRun run_experiment(const Dataset& ds, const FeatureSpec& spec, Task task,
                          const ExperimentOptions& opts) {
    const FeatureMatrix fm = build_features(ds, spec);
    const std::vector<int> labels = task_labels(fm.occupants, task);
    check_two_classes(labels, task);

    std::vector<Season> seasons;
    seasons.reserve(fm.timestamps.size());
    for (auto ts : fm.timestamps) seasons.push_back(season_of(ts));
    const auto splits = make_splits(fm.occupants, seasons, opts.plan);

    FeatureRun run;
    run.feature_names = fm.names;
    run.task = task;
    for (int r = 0; r < opts.plan.rounds; ++r)
        run.rounds.push_back(run_round(fm, labels, splits[static_cast<std::size_t>(r)], r,
                                       opts).result);

    run.accuracy = aggregate_of(run.rounds, &MetricReport::accuracy);
    run.precision = aggregate_of(run.rounds, &MetricReport::precision);
    run.recall = aggregate_of(run.rounds, &MetricReport::recall);
    run.f1 = aggregate_of(run.rounds, &MetricReport::f1);
    run.rmse = aggregate_of(run.rounds, &MetricReport::rmse);
    run.nrmse = aggregate_of(run.rounds, &MetricReport::nrmse);
    return run;
}

SvmModel train_round_model(const Dataset& ds, const FeatureSpec& spec, Task task,
                           const ExperimentOptions& opts, int round) {
    if (round < 0 || round >= opts.plan.rounds)
        throw ValidationError("round index out of range");
    const FeatureMatrix fm = build_features(ds, spec);
    const std::vector<int> labels = task_labels(fm.occupants, task);
    check_two_classes(labels, task);
    std::vector<Season> seasons;
    seasons.reserve(fm.timestamps.size());
    for (auto ts : fm.timestamps) seasons.push_back(season_of(ts));
    const auto splits = make_splits(fm.occupants, seasons, opts.plan);
    return run_round(fm, labels, splits[static_cast<std::size_t>(round)], round, opts).model;
}

}  // namespace occdet
