#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "occdet/eval.hpp"
#include "occdet/features.hpp"
#include "occdet/ingest.hpp"
#include "occdet/io.hpp"
#include "occdet/simulator.hpp"
#include "occdet/timeutil.hpp"

using namespace occdet;

namespace {

SimConfig quiet_config(int room = 1) {
    SimConfig cfg = default_config(room);
    cfg.sensor_noise_sd_ppm = 0.0;
    return cfg;
}

double total_mass(const ZoneState& s, const SimConfig& cfg) {
    const double v = cfg.room.length_m * cfg.room.width_m * cfg.room.height_m;
    const double vu = v * (cfg.room.height_m - cfg.zone_split_m) / cfg.room.height_m;
    return s.lower_ppm * (v - vu) + s.upper_ppm * vu;
}

}  // namespace

TEST_CASE("outdoor equilibrium is a fixed point when empty and closed") {
    const SimConfig cfg = quiet_config();
    const ZoneState eq{cfg.outdoor_ppm, cfg.outdoor_ppm};
    const ZoneState next = step(eq, cfg, 0, 0.0, cfg.dt_s);
    CHECK(next.lower_ppm == eq.lower_ppm);
    CHECK(next.upper_ppm == eq.upper_ppm);
}

TEST_CASE("occupancy raises both zones with the upper leading") {
    const SimConfig cfg = quiet_config();
    ZoneState s{cfg.outdoor_ppm, cfg.outdoor_ppm};
    double prev_lower = s.lower_ppm, prev_upper = s.upper_ppm;
    for (int i = 0; i < 240; ++i) {  // one hour
        s = step(s, cfg, 25, 0.0, cfg.dt_s);
        CHECK(s.lower_ppm >= prev_lower);
        CHECK(s.upper_ppm >= prev_upper);
        CHECK(s.upper_ppm >= s.lower_ppm);
        prev_lower = s.lower_ppm;
        prev_upper = s.upper_ppm;
    }
    CHECK(s.upper_ppm - s.lower_ppm > 100.0);
}

TEST_CASE("closed empty room conserves mass to 1e-9 relative per step") {
    SimConfig cfg = quiet_config();
    cfg.infiltration_ach = 0.0;  // sealed: no window, no leakage
    ZoneState s{1800.0, 2600.0};  // leftover stratification
    double mass = total_mass(s, cfg);
    for (int i = 0; i < 5000; ++i) {
        s = step(s, cfg, 0, 0.0, cfg.dt_s);
        const double next_mass = total_mass(s, cfg);
        CHECK(std::abs(next_mass - mass) <= 1e-9 * mass);
        mass = next_mass;
    }
    // and the gradient mixes away
    CHECK(std::abs(s.upper_ppm - s.lower_ppm) < 1.0);
}

TEST_CASE("explicit euler tracks a dt/100 reference within 1%") {
    const SimConfig cfg = quiet_config();
    SimConfig fine = cfg;
    fine.dt_s = cfg.dt_s / 100.0;

    ZoneState coarse{cfg.outdoor_ppm, cfg.outdoor_ppm};
    ZoneState reference = coarse;
    // one hour occupied with a partially open window, then checks along the way
    for (int i = 0; i < 240; ++i) {
        coarse = step(coarse, cfg, 20, 0.3, cfg.dt_s);
        for (int j = 0; j < 100; ++j) reference = step(reference, fine, 20, 0.3, fine.dt_s);
        CHECK(std::abs(coarse.lower_ppm - reference.lower_ppm) <=
              0.01 * std::abs(reference.lower_ppm));
        CHECK(std::abs(coarse.upper_ppm - reference.upper_ppm) <=
              0.01 * std::abs(reference.upper_ppm));
    }
}

TEST_CASE("sensor sampling: noise-free reading equals the zone value") {
    const SimConfig cfg = quiet_config();
    rng::Engine eng(1);
    const ZoneState s{600.0, 800.0};
    const auto readings = sample_sensors(s, cfg, 0.0, eng);
    REQUIRE(readings.size() == cfg.room.devices.size());
    for (std::size_t d = 0; d < readings.size(); ++d) {
        const double expected =
            cfg.room.devices[d].height_m >= cfg.zone_split_m ? s.upper_ppm : s.lower_ppm;
        CHECK(readings[d].first == expected);
        CHECK(readings[d].second == expected);
    }
}

TEST_CASE("sensor noise is centered and clipped") {
    SimConfig cfg = default_config(1);
    cfg.sensor_noise_sd_ppm = 10.0;
    cfg.noise_clip_ppm = 30.0;
    rng::Engine eng(7);
    const ZoneState s{1000.0, 1000.0};
    double sum = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < 2500; ++i) {
        const auto readings = sample_sensors(s, cfg, 0.0, eng);
        for (const auto& [a, b] : readings) {
            CHECK(std::abs(a - 1000.0) <= 30.0);
            CHECK(std::abs(b - 1000.0) <= 30.0);
            sum += (a - 1000.0) + (b - 1000.0);
            count += 2;
        }
    }
    CHECK(std::abs(sum / static_cast<double>(count)) <= 1.0);
}

TEST_CASE("near-window device reads closer to outdoor when the window is open") {
    const SimConfig cfg = quiet_config(2);
    rng::Engine eng(3);
    const ZoneState s{1200.0, 1400.0};
    const auto readings = sample_sensors(s, cfg, 1.0, eng);
    // device 3 sits by the window, device 4 far away, both in the lower zone
    const double near = readings[2].first;
    const double far = readings[3].first;
    CHECK(std::abs(near - cfg.outdoor_ppm) < std::abs(far - cfg.outdoor_ppm));
    CHECK(near == doctest::Approx(0.7 * 1200.0 + 0.3 * cfg.outdoor_ppm).epsilon(1e-12));
}

TEST_CASE("ventilation monotonicity: more opening never slows the return to outdoor") {
    const SimConfig cfg = quiet_config();
    ZoneState occupied{cfg.outdoor_ppm, cfg.outdoor_ppm};
    for (int i = 0; i < 240; ++i) occupied = step(occupied, cfg, 25, 0.0, cfg.dt_s);

    auto recovery_steps = [&](double opening) {
        ZoneState s = occupied;
        int steps = 0;
        while ((std::abs(s.lower_ppm - cfg.outdoor_ppm) > 50.0 ||
                std::abs(s.upper_ppm - cfg.outdoor_ppm) > 50.0) &&
               steps < 1000000) {
            s = step(s, cfg, 0, opening, cfg.dt_s);
            ++steps;
        }
        return steps;
    };
    int prev = recovery_steps(0.0);
    for (double opening : {0.25, 0.5, 0.75, 1.0}) {
        const int cur = recovery_steps(opening);
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("vd stays positive under sustained occupancy and collapses afterwards") {
    const SimConfig cfg = quiet_config();
    ZoneState s{cfg.outdoor_ppm, cfg.outdoor_ppm};
    for (int i = 0; i < 20; ++i) s = step(s, cfg, 25, 0.2, cfg.dt_s);  // 5 minutes in
    for (int i = 0; i < 100; ++i) {
        s = step(s, cfg, 25, 0.2, cfg.dt_s);
        CHECK(s.upper_ppm - s.lower_ppm > 0.0);
    }
    const double avg_before = 0.5 * (s.upper_ppm + s.lower_ppm);
    // occupants leave, windows closed: the average lingers, the gradient dies
    for (int i = 0; i < 240; ++i) s = step(s, cfg, 0, 0.0, cfg.dt_s);
    const double avg_after = 0.5 * (s.upper_ppm + s.lower_ppm);
    CHECK(s.upper_ppm - s.lower_ppm < 10.0);
    CHECK(avg_after > cfg.outdoor_ppm + 0.5 * (avg_before - cfg.outdoor_ppm));
}

TEST_CASE("generate is deterministic and matches its own CSV round-trip") {
    SimConfig cfg = default_config(1);
    cfg.seed = 42;
    const Schedule sched = default_schedule(1, 2, 42);
    const SimOutput a = generate(cfg, sched);
    const SimOutput b = generate(cfg, sched);
    CHECK(a.dataset.grid == b.dataset.grid);
    CHECK(a.dataset.series == b.dataset.series);
    CHECK(a.dataset.labels == b.dataset.labels);
    CHECK(a.dataset.ventilation == b.dataset.ventilation);
    CHECK(sensor_csv(a.samples) == sensor_csv(b.samples));

    // writing and re-ingesting the CSV forms reproduces the dataset bit-exactly
    const auto samples = parse_sensor_csv(sensor_csv(a.samples));
    std::vector<LabelRow> rows;
    const auto label_rows = parse_label_csv(label_csv(a.dataset));
    const Dataset rebuilt = build_dataset(samples, label_rows, cfg.room);
    CHECK(rebuilt.grid == a.dataset.grid);
    CHECK(rebuilt.labels == a.dataset.labels);
    CHECK(rebuilt.ventilation == a.dataset.ventilation);
    CHECK(rebuilt.series == a.dataset.series);
}

TEST_CASE("generate: empty schedule day yields all-zero labels near outdoor") {
    SimConfig cfg = quiet_config();
    cfg.seed = 1;
    Schedule sched;
    sched.sample_days = {days_from_civil(2022, 6, 6) * 86400};
    const SimOutput out = generate(cfg, sched);
    for (int label : out.dataset.labels) CHECK(label == 0);
    for (const auto& [id, series] : out.dataset.series)
        for (double v : series) CHECK(std::abs(v - cfg.outdoor_ppm) < 1.0);
}

TEST_CASE("generate: lesson blocks produce a vd signal well above noise") {
    SimConfig cfg = default_config(2);
    cfg.seed = 9;
    const Schedule sched = default_schedule(2, 2, 9);
    const SimOutput out = generate(cfg, sched);
    const auto spec = make_feature_spec({Feature::vd}, out.dataset);
    const auto fm = build_features(out.dataset, spec);
    double vd_occupied = 0.0;
    std::size_t occupied = 0;
    for (std::size_t r = 0; r < fm.values.rows(); ++r) {
        if (fm.occupants[r] > 0) {
            vd_occupied += fm.values.at(r, 0);
            ++occupied;
        }
    }
    REQUIRE(occupied > 0);
    CHECK(vd_occupied / static_cast<double>(occupied) > 3.0 * cfg.sensor_noise_sd_ppm);
}

TEST_CASE("schedules reject window changes while unoccupied") {
    Schedule sched;
    sched.sample_days = {days_from_civil(2022, 6, 6) * 86400};
    const std::int64_t t0 = sched.sample_days[0] + 8 * 3600;
    sched.events = {{t0, 0, 1.0}};  // opens an empty room
    CHECK_THROWS_WITH_AS(validate(sched), doctest::Contains("unoccupied"), ValidationError);

    sched.events = {{t0, 25, 1.0}, {t0 + 2700, 0, 0.0}};  // closed on leaving: fine
    CHECK_NOTHROW(validate(sched));

    sched.events = {{t0, 25, 1.0}, {t0 + 2700, 0, 1.0}, {t0 + 5400, 0, 0.0}};
    CHECK_THROWS_AS(validate(sched), ValidationError);  // closed an hour after leaving
}

TEST_CASE("config validation names the offending field") {
    SimConfig cfg = default_config(1);
    cfg.room.length_m = -1.0;
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("length_m"), ValidationError);

    cfg = default_config(1);
    cfg.dt_s = 30.0;
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("dt_s"), ValidationError);

    cfg = default_config(1);
    cfg.zone_split_m = 5.0;
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("zone_split_m"), ValidationError);

    cfg = default_config(1);
    cfg.room.devices.push_back(cfg.room.devices.front());
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("duplicate"), ValidationError);
}

TEST_CASE("default schedules span both seasons with school-hour lessons") {
    const Schedule sched = default_schedule(1, 10, 42);
    CHECK(sched.sample_days.size() == 10);
    bool winter = false, summer = false;
    for (auto day : sched.sample_days) {
        winter |= season_of(day) == Season::winter;
        summer |= season_of(day) == Season::summer;
    }
    CHECK(winter);
    CHECK(summer);
    CHECK(!sched.events.empty());
    int max_count = 0;
    for (const auto& e : sched.events) max_count = std::max(max_count, e.occupants);
    CHECK(max_count >= 8);
}
