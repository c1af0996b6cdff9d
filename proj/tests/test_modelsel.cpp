#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "occdet/ingest.hpp"
#include "occdet/modelsel.hpp"
#include "occdet/rng.hpp"

using namespace occdet;

TEST_CASE("kfold partitions exactly with balanced sizes") {
    const std::vector<int> y(10, 0);
    const auto folds = kfold_indices(10, 5, y, 1);
    REQUIRE(folds.size() == 5);
    std::set<std::size_t> seen;
    for (const auto& f : folds) {
        CHECK(f.size() == 2);
        for (std::size_t i : f) CHECK(seen.insert(i).second);
    }
    CHECK(seen.size() == 10);
}

TEST_CASE("kfold stratifies an 80/20 mix") {
    std::vector<int> y(100);
    for (std::size_t i = 0; i < 100; ++i) y[i] = i < 80 ? 0 : 1;
    const auto folds = kfold_indices(100, 5, y, 3);
    for (const auto& f : folds) {
        CHECK(f.size() == 20);
        std::size_t minority = 0;
        for (std::size_t i : f) minority += y[i] == 1 ? 1 : 0;
        CHECK(minority >= 3);
        CHECK(minority <= 5);
    }
}

TEST_CASE("kfold fold sizes differ by at most one under odd splits") {
    std::vector<int> y(23);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 3);
    const auto folds = kfold_indices(y.size(), 5, y, 7);
    std::size_t lo = y.size(), hi = 0, total = 0;
    for (const auto& f : folds) {
        lo = std::min(lo, f.size());
        hi = std::max(hi, f.size());
        total += f.size();
    }
    CHECK(total == y.size());
    CHECK(hi - lo <= 1);
}

TEST_CASE("kfold rejects bad fold counts") {
    const std::vector<int> y(4, 0);
    CHECK_THROWS_AS(kfold_indices(4, 0, y, 1), ValidationError);
    CHECK_THROWS_AS(kfold_indices(4, 5, y, 1), ValidationError);
}

TEST_CASE("kfold is deterministic in the seed") {
    std::vector<int> y(40);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
    CHECK(kfold_indices(40, 5, y, 9) == kfold_indices(40, 5, y, 9));
    CHECK(kfold_indices(40, 5, y, 9) != kfold_indices(40, 5, y, 10));
}

TEST_CASE("search_grid returns the single cell of a one-cell grid") {
    GridSpec grid{0, 0, 0, 0, -10, 2, 5};
    const auto cv = search_grid(grid, [](int, int) { return 0.5; }, Exec::serial);
    // the probing expansion finds nothing better and the choice stays put
    CHECK(cv.chosen_c_exp == 0);
    CHECK(cv.chosen_g_exp == 0);
    CHECK(!cv.hit_expansion_limit);
}

TEST_CASE("constant scores pick the smallest C then smallest gamma") {
    GridSpec grid{-2, 2, -3, 1, -10, 2, 5};
    const auto cv = search_grid(grid, [](int, int) { return 0.7; }, Exec::serial);
    CHECK(cv.chosen_c_exp == -2);
    CHECK(cv.chosen_g_exp == -3);
    CHECK(!cv.hit_expansion_limit);

    // with a zero expansion budget the boundary winner is flagged instead
    GridSpec frozen{-2, 2, -3, 1, -10, 2, 0};
    const auto cv2 = search_grid(frozen, [](int, int) { return 0.7; }, Exec::serial);
    CHECK(cv2.chosen_c_exp == -2);
    CHECK(cv2.chosen_g_exp == -3);
    CHECK(cv2.hit_expansion_limit);
}

TEST_CASE("boundary optimum triggers expansion until interior") {
    GridSpec grid{-2, 0, -2, 0, -10, 2, 5};
    // peak at (3, 2): outside the initial ranges
    auto score = [](int c, int g) {
        return 1.0 / (1.0 + std::abs(c - 3) + std::abs(g - 2));
    };
    const auto cv = search_grid(grid, score, Exec::serial);
    CHECK(cv.expansions >= 1);
    CHECK(cv.chosen_c_exp == 3);
    CHECK(cv.chosen_g_exp == 2);
    CHECK(!cv.hit_expansion_limit);
}

TEST_CASE("gamma never expands below the floor") {
    GridSpec grid{-2, 2, -4, 0, -4, 2, 5};
    // ever-better scores toward tiny gamma would pull the boundary down
    auto score = [](int c, int g) { return 1.0 / (10.0 + g) - 0.01 * std::abs(c); };
    const auto cv = search_grid(grid, score, Exec::serial);
    CHECK(cv.chosen_c_exp == 0);
    CHECK(cv.chosen_g_exp == -4);
    CHECK(cv.expansions == 0);
    CHECK(!cv.hit_expansion_limit);  // the floor is a wall, not a searchable boundary
    for (const auto& cell : cv.cells) CHECK(cell.g_exp >= -4);
}

TEST_CASE("expansion limit is flagged") {
    GridSpec grid{0, 1, 0, 1, -10, 1, 2};
    auto score = [](int c, int) { return static_cast<double>(c); };  // monotone in c
    const auto cv = search_grid(grid, score, Exec::serial);
    CHECK(cv.expansions == 2);
    CHECK(cv.hit_expansion_limit);
}

TEST_CASE("parallel and serial grid search agree exactly") {
    GridSpec grid{-3, 3, -3, 3, -10, 2, 3};
    auto score = [](int c, int g) {
        return std::exp(-0.1 * ((c - 1.0) * (c - 1.0) + (g + 1.0) * (g + 1.0)));
    };
    const auto serial = search_grid(grid, score, Exec::serial);
    const auto parallel = search_grid(grid, score, Exec::parallel);
    CHECK(serial.chosen_c_exp == parallel.chosen_c_exp);
    CHECK(serial.chosen_g_exp == parallel.chosen_g_exp);
    CHECK(serial.best_score == parallel.best_score);
    CHECK(serial.expansions == parallel.expansions);
}

TEST_CASE("grid_search finds workable parameters on a separable problem") {
    rng::Engine eng(5);
    const std::size_t n = 60;
    Matrix x(n, 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = i % 2 == 0;
        x.at(i, 0) = (pos ? 0.7 : 0.3) + 0.05 * rng::gaussian(eng);
        x.at(i, 1) = rng::uniform01(eng);
        y[i] = pos ? 1 : 0;
    }
    GridSpec grid{-2, 4, -4, 2, -10, 2, 1};
    const auto cv = grid_search(x, y, grid, 5, 11);
    CHECK(cv.best_score > 0.9);
}

namespace {

std::vector<Season> seasons_half(std::size_t n) {
    std::vector<Season> seasons(n, Season::winter);
    for (std::size_t i = n / 2; i < n; ++i) seasons[i] = Season::summer;
    return seasons;
}

std::vector<int> occupancy_pattern(std::size_t n) {
    std::vector<int> occ(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (i % 4 == 1 || i % 4 == 2) occ[i] = 20;
    return occ;
}

}  // namespace

TEST_CASE("make_splits produces three disjoint stratified 60/40 rounds") {
    const std::size_t n = 100;
    const auto occ = occupancy_pattern(n);
    const auto seasons = seasons_half(n);
    SplitPlan plan;
    plan.seed = 17;
    const auto splits = make_splits(occ, seasons, plan);
    REQUIRE(splits.size() == 3);
    for (const auto& s : splits) {
        CHECK(s.warnings.empty());
        CHECK(s.train.size() == 60);
        CHECK(s.test.size() == 40);
        std::set<std::size_t> all(s.train.begin(), s.train.end());
        for (std::size_t i : s.test) CHECK(all.insert(i).second);
        CHECK(all.size() == n);

        // both seasons and both states present in train
        bool train_winter = false, train_summer = false, train_occ = false,
             train_empty = false;
        for (std::size_t i : s.train) {
            train_winter |= seasons[i] == Season::winter;
            train_summer |= seasons[i] == Season::summer;
            train_occ |= occ[i] > 0;
            train_empty |= occ[i] == 0;
        }
        CHECK(train_winter);
        CHECK(train_summer);
        CHECK(train_occ);
        CHECK(train_empty);
    }
    CHECK(splits[0].train != splits[1].train);
}

TEST_CASE("single-season data degrades with a warning") {
    const std::size_t n = 40;
    const auto occ = occupancy_pattern(n);
    const std::vector<Season> seasons(n, Season::summer);
    SplitPlan plan;
    const auto splits = make_splits(occ, seasons, plan);
    REQUIRE(!splits.empty());
    CHECK(!splits[0].warnings.empty());
}

TEST_CASE("identical seeds give identical splits") {
    const std::size_t n = 50;
    const auto occ = occupancy_pattern(n);
    const auto seasons = seasons_half(n);
    SplitPlan plan;
    plan.seed = 23;
    const auto a = make_splits(occ, seasons, plan);
    const auto b = make_splits(occ, seasons, plan);
    for (std::size_t r = 0; r < a.size(); ++r) {
        CHECK(a[r].train == b[r].train);
        CHECK(a[r].test == b[r].test);
    }
}

TEST_CASE("norm stats depend only on the training rows") {
    rng::Engine eng(31);
    Matrix m(30, 2);
    for (auto& v : m.data()) v = rng::uniform01(eng);
    std::vector<std::size_t> train = {0, 2, 4, 6, 8, 10};
    const auto before = fit_norm_stats(m, train, "t");
    // scribble over every non-train row
    for (std::size_t r = 0; r < m.rows(); ++r)
        if (std::find(train.begin(), train.end(), r) == train.end())
            for (std::size_t c = 0; c < m.cols(); ++c) m.at(r, c) = 1e9;
    const auto after = fit_norm_stats(m, train, "t");
    CHECK(before.min == after.min);
    CHECK(before.max == after.max);
}

namespace {

// Small labeled dataset with an informative vertical difference.
Dataset tiny_room_dataset(std::size_t n, std::uint64_t seed) {
    Dataset ds;
    ds.room.room_id = "tiny";
    ds.room.length_m = 8;
    ds.room.width_m = 7;
    ds.room.height_m = 3;
    ds.room.devices = {{"up", 2.0, 1.0, ""}, {"low", 0.6, 1.1, ""}};
    ds.device_order = {"up", "low"};
    ds.interval_s = 300;
    rng::Engine eng(seed);
    std::vector<double> up(n), low(n);
    const std::int64_t winter = 1638748800;  // 2021-12-06
    const std::int64_t summer = 1654473600;  // 2022-06-06
    for (std::size_t i = 0; i < n; ++i) {
        const bool occupied = i % 3 == 1;
        const bool summer_half = i >= n / 2;
        ds.grid.push_back((summer_half ? summer : winter) +
                          static_cast<std::int64_t>(i) * 300);
        ds.labels.push_back(occupied ? 20 : 0);
        const double base = 450 + 400 * rng::uniform01(eng);  // carry-over look-alike
        const double vd = occupied ? 150 + 30 * rng::uniform01(eng) : 5 * rng::uniform01(eng);
        low[i] = base;
        up[i] = base + vd;
    }
    ds.series["up"] = up;
    ds.series["low"] = low;
    return ds;
}

}  // namespace

TEST_CASE("run_experiment is deterministic and reports sane aggregates") {
    const auto ds = tiny_room_dataset(90, 3);
    const auto spec = make_feature_spec({Feature::avg, Feature::vd}, ds);
    ExperimentOptions opts;
    opts.plan.seed = 5;
    opts.grid = GridSpec{-2, 2, -4, 0, -10, 2, 1};
    opts.cv_folds = 3;

    const auto a = run_experiment(ds, spec, Task::state, opts);
    const auto b = run_experiment(ds, spec, Task::state, opts);
    REQUIRE(a.rounds.size() == 3);
    for (std::size_t r = 0; r < a.rounds.size(); ++r) {
        CHECK(a.rounds[r].metrics.accuracy == b.rounds[r].metrics.accuracy);
        CHECK(a.rounds[r].chosen_c == b.rounds[r].chosen_c);
        CHECK(a.rounds[r].chosen_gamma == b.rounds[r].chosen_gamma);
    }
    double mean = 0.0;
    for (const auto& r : a.rounds) mean += r.metrics.accuracy;
    mean /= static_cast<double>(a.rounds.size());
    CHECK(a.accuracy.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(a.accuracy.mean > 0.8);  // the VD signal is there to find
}

TEST_CASE("vd adds accuracy over the carry-over-confused baseline") {
    const auto ds = tiny_room_dataset(120, 7);
    ExperimentOptions opts;
    opts.plan.seed = 11;
    opts.grid = GridSpec{-1, 3, -4, 0, -10, 2, 0};
    opts.cv_folds = 3;
    const auto base =
        run_experiment(ds, make_feature_spec({Feature::avg}, ds), Task::state, opts);
    const auto with_vd = run_experiment(ds, make_feature_spec({Feature::avg, Feature::vd}, ds),
                                        Task::state, opts);
    CHECK(with_vd.accuracy.mean > base.accuracy.mean);
}

TEST_CASE("single-class labels raise a degenerate-data error") {
    auto ds = tiny_room_dataset(30, 9);
    std::fill(ds.labels.begin(), ds.labels.end(), 0);
    const auto spec = make_feature_spec({Feature::avg}, ds);
    ExperimentOptions opts;
    CHECK_THROWS_AS(run_experiment(ds, spec, Task::state, opts), DegenerateError);
}

TEST_CASE("train_round_model matches the experiment protocol") {
    const auto ds = tiny_room_dataset(90, 13);
    const auto spec = make_feature_spec({Feature::avg, Feature::vd}, ds);
    ExperimentOptions opts;
    opts.plan.seed = 19;
    opts.grid = GridSpec{-1, 1, -2, 0, -10, 2, 0};
    opts.cv_folds = 3;
    const auto model = train_round_model(ds, spec, Task::state, opts, 0);
    CHECK(model.feature_names == std::vector<std::string>{"AVG", "VD"});
    CHECK(model.norm.min.size() == 2);
    CHECK(!model.pairs.empty());
    CHECK_THROWS_AS(train_round_model(ds, spec, Task::state, opts, 7), ValidationError);
}
