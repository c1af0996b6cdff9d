#include "occdet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "occdet/timeutil.hpp"

namespace occdet {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ValidationError("sim config: field '" + field + "' " + what);
}

}  // namespace

void validate(const SimConfig& cfg) {
    require(cfg.room.length_m > 0, "room.length_m", "must be > 0");
    require(cfg.room.width_m > 0, "room.width_m", "must be > 0");
    require(cfg.room.height_m > 0, "room.height_m", "must be > 0");
    require(cfg.zone_split_m > 0 && cfg.zone_split_m < cfg.room.height_m, "zone_split_m",
            "must split the room height");
    require(cfg.outdoor_ppm > 0, "outdoor_ppm", "must be > 0");
    require(cfg.emission_lps_per_person > 0, "emission_lps_per_person", "must be > 0");
    require(cfg.interzone_base_m3s > 0, "interzone_base_m3s", "must be > 0");
    require(cfg.interzone_per_person_m3s >= 0, "interzone_per_person_m3s", "must be >= 0");
    require(cfg.window_ach_open > 0, "window_ach_open", "must be > 0");
    require(cfg.infiltration_ach >= 0, "infiltration_ach", "must be >= 0");
    require(cfg.sensor_noise_sd_ppm >= 0, "sensor_noise_sd_ppm", "must be >= 0");
    require(cfg.noise_clip_ppm > 0, "noise_clip_ppm", "must be > 0");
    require(cfg.near_window_m >= 0, "near_window_m", "must be >= 0");
    require(cfg.near_window_blend >= 0 && cfg.near_window_blend <= 1, "near_window_blend",
            "must be in [0,1]");
    require(cfg.dt_s > 0 && cfg.dt_s <= 15.0, "dt_s", "must be in (0, 15]");
    require(cfg.sample_interval_s > 0, "sample_interval_s", "must be > 0");
    require(std::fmod(static_cast<double>(cfg.sample_interval_s), cfg.dt_s) == 0.0, "dt_s",
            "must divide sample_interval_s");
    require(cfg.sample_day_start_s >= 0 && cfg.sample_day_end_s <= 86400 &&
                cfg.sample_day_start_s < cfg.sample_day_end_s,
            "sample_day_start_s/sample_day_end_s", "must define a window within the day");
    require(cfg.sample_day_start_s % cfg.sample_interval_s == 0 &&
                cfg.sample_day_end_s % cfg.sample_interval_s == 0,
            "sample window", "must align with sample_interval_s");
    require(!cfg.room.devices.empty(), "room.devices", "must not be empty");
    std::set<std::string> ids;
    for (const auto& d : cfg.room.devices) {
        require(d.height_m > 0, "devices." + d.device_id + ".height_m", "must be > 0");
        require(d.distance_to_window_m >= 0,
                "devices." + d.device_id + ".distance_to_window_m", "must be >= 0");
        require(ids.insert(d.device_id).second, "devices." + d.device_id, "duplicate id");
    }
}

void validate(const Schedule& sched) {
    if (sched.sample_days.empty())
        throw ValidationError("schedule: no sample days (must span at least one day)");
    for (std::size_t i = 0; i < sched.sample_days.size(); ++i) {
        if (sched.sample_days[i] % 86400 != 0)
            throw ValidationError("schedule: sample day " + std::to_string(i) +
                                  " is not midnight-aligned");
        if (i > 0 && sched.sample_days[i] <= sched.sample_days[i - 1])
            throw ValidationError("schedule: sample days must be strictly increasing");
    }
    int prev_occ = 0;
    double prev_opening = 0.0;
    std::int64_t prev_t = std::numeric_limits<std::int64_t>::min();
    for (std::size_t i = 0; i < sched.events.size(); ++i) {
        const auto& e = sched.events[i];
        if (e.t <= prev_t)
            throw ValidationError("schedule: event timestamps must be strictly increasing");
        if (e.occupants < 0)
            throw ValidationError("schedule: negative occupant count at " +
                                  format_iso8601_utc(e.t));
        if (e.opening < 0.0 || e.opening > 1.0)
            throw ValidationError("schedule: window opening outside [0,1] at " +
                                  format_iso8601_utc(e.t));
        // the window state may only change while the room is occupied
        if (e.opening != prev_opening && prev_occ == 0 && e.occupants == 0)
            throw ValidationError(
                "schedule: window opening changes while the room is unoccupied at " +
                format_iso8601_utc(e.t));
        prev_occ = e.occupants;
        prev_opening = e.opening;
        prev_t = e.t;
    }
}

ZoneState step(const ZoneState& state, const SimConfig& cfg, int occupants, double opening,
               double dt) {
    const double volume = cfg.room.length_m * cfg.room.width_m * cfg.room.height_m;
    const double v_upper = volume * (cfg.room.height_m - cfg.zone_split_m) / cfg.room.height_m;
    const double v_lower = volume - v_upper;

    const double n = static_cast<double>(occupants);
    const double exchange = cfg.interzone_base_m3s + n * cfg.interzone_per_person_m3s;
    const double outdoor_rate =
        (opening * cfg.window_ach_open + cfg.infiltration_ach) / 3600.0;
    // emission in ppm * m3 / s: L/s of pure CO2 is 1e-3 m3/s, i.e. 1e3 ppm * m3 / s
    const double source = n * cfg.emission_lps_per_person * 1000.0;

    const double lower_flux = exchange * (state.upper_ppm - state.lower_ppm) +
                              outdoor_rate * v_lower * (cfg.outdoor_ppm - state.lower_ppm);
    const double upper_flux = source + exchange * (state.lower_ppm - state.upper_ppm) +
                              outdoor_rate * v_upper * (cfg.outdoor_ppm - state.upper_ppm);

    return {state.lower_ppm + dt * lower_flux / v_lower,
            state.upper_ppm + dt * upper_flux / v_upper};
}

std::vector<std::pair<double, double>> sample_sensors(const ZoneState& state,
                                                      const SimConfig& cfg, double opening,
                                                      rng::Engine& eng) {
    std::vector<std::pair<double, double>> out;
    out.reserve(cfg.room.devices.size());
    for (const auto& dev : cfg.room.devices) {
        double value = dev.height_m >= cfg.zone_split_m ? state.upper_ppm : state.lower_ppm;
        if (opening > 0.0 && dev.distance_to_window_m <= cfg.near_window_m) {
            const double blend = cfg.near_window_blend * opening;
            value = (1.0 - blend) * value + blend * cfg.outdoor_ppm;
        }
        auto noisy = [&] {
            const double noise = std::clamp(rng::gaussian(eng) * cfg.sensor_noise_sd_ppm,
                                            -cfg.noise_clip_ppm, cfg.noise_clip_ppm);
            return value + noise;
        };
        const double a = noisy();
        const double b = noisy();
        out.emplace_back(a, b);
    }
    return out;
}

namespace {

// Sample days more than a week apart belong to separate integration blocks;
// each block starts fresh at outdoor concentration.
std::vector<std::pair<std::int64_t, std::int64_t>> blocks_of(const Schedule& sched) {
    std::vector<std::pair<std::int64_t, std::int64_t>> blocks;
    for (std::int64_t day : sched.sample_days) {
        if (!blocks.empty() && day - blocks.back().second <= 7 * 86400) {
            blocks.back().second = day;
        } else {
            blocks.emplace_back(day, day);
        }
    }
    return blocks;
}

}  // namespace

SimOutput generate(const SimConfig& cfg, const Schedule& sched) {
    validate(cfg);
    validate(sched);

    SimOutput out;
    Dataset& ds = out.dataset;
    ds.room = cfg.room;
    ds.interval_s = cfg.sample_interval_s;
    for (const auto& d : cfg.room.devices) ds.device_order.push_back(d.device_id);
    for (const auto& id : ds.device_order) ds.series[id] = {};

    const std::set<std::int64_t> sample_days(sched.sample_days.begin(),
                                             sched.sample_days.end());
    rng::Engine eng(rng::derive(cfg.seed, 0x73696d756cULL));

    const std::int64_t dt_ticks = static_cast<std::int64_t>(cfg.dt_s * 1000.0 + 0.5);
    std::size_t next_event = 0;
    int occupants = 0;
    double opening = 0.0;

    for (const auto& [first_day, last_day] : blocks_of(sched)) {
        ZoneState state{cfg.outdoor_ppm, cfg.outdoor_ppm};
        const std::int64_t block_end = last_day + 86400;
        // catch the event pointer up to the block start
        while (next_event < sched.events.size() && sched.events[next_event].t < first_day) {
            occupants = sched.events[next_event].occupants;
            opening = sched.events[next_event].opening;
            ++next_event;
        }
        for (std::int64_t ticks = first_day * 1000; ticks < block_end * 1000;
             ticks += dt_ticks) {
            const std::int64_t t = ticks / 1000;
            while (next_event < sched.events.size() && sched.events[next_event].t <= t) {
                occupants = sched.events[next_event].occupants;
                opening = sched.events[next_event].opening;
                ++next_event;
            }
            const std::int64_t midnight = (t / 86400) * 86400;
            const std::int64_t tod = t - midnight;
            const bool sampled = ticks % (cfg.sample_interval_s * 1000) == 0 &&
                                 sample_days.count(midnight) > 0 &&
                                 tod >= cfg.sample_day_start_s && tod < cfg.sample_day_end_s;
            if (sampled) {
                const auto readings = sample_sensors(state, cfg, opening, eng);
                ds.grid.push_back(t);
                ds.labels.push_back(occupants);
                ds.ventilation.push_back(opening);
                for (std::size_t d = 0; d < readings.size(); ++d) {
                    const auto [a, b] = readings[d];
                    out.samples.push_back({t, ds.device_order[d], a, b});
                    ds.series[ds.device_order[d]].push_back(0.5 * (a + b));
                }
            }
            state = step(state, cfg, occupants, opening, cfg.dt_s);
        }
    }
    if (ds.grid.empty())
        throw ValidationError("simulation produced no samples; check the sampling window");
    return out;
}

SimConfig default_config(int room_index) {
    if (room_index < 1 || room_index > 3)
        throw ValidationError("room preset index must be 1, 2, or 3");
    SimConfig cfg;
    const std::string rid = "room" + std::to_string(room_index);
    cfg.room.room_id = rid;
    const std::string p = std::to_string(room_index);
    switch (room_index) {
        case 1:
            cfg.room.length_m = 7.64;
            cfg.room.width_m = 7.55;
            cfg.room.height_m = 3.12;
            cfg.room.devices = {
                {p + "1", 0.60, 2.0, "desk underside", {}, {}},
                {p + "2", 2.10, 2.2, "cabinet top", {}, {}},
                {p + "3", 1.10, 0.6, "window sill", {}, {}},
                {p + "4", 1.20, 6.5, "back wall", {}, {}},
            };
            break;
        case 2:
            cfg.room.length_m = 9.15;
            cfg.room.width_m = 6.70;
            cfg.room.height_m = 3.30;
            cfg.room.devices = {
                {p + "1", 0.60, 2.5, "desk underside", {}, {}},
                {p + "2", 2.20, 2.6, "cabinet top", {}, {}},
                {p + "3", 1.15, 0.5, "window sill", {}, {}},
                {p + "4", 1.25, 8.0, "back wall", {}, {}},
            };
            break;
        default:
            cfg.room.length_m = 8.15;
            cfg.room.width_m = 7.05;
            cfg.room.height_m = 2.82;
            cfg.room.devices = {
                {p + "1", 0.60, 1.8, "desk underside", {}, {}},
                {p + "2", 2.00, 2.0, "cabinet top", {}, {}},
                {p + "3", 1.10, 0.7, "window sill", {}, {}},
                {p + "4", 1.15, 7.2, "back wall", {}, {}},
            };
            break;
    }
    return cfg;
}

namespace {

constexpr int kRoomBaseCount[4] = {0, 12, 24, 21};

// weekday sequences starting on a Monday
std::vector<std::int64_t> weekdays_from(std::int64_t monday, int count) {
    std::vector<std::int64_t> days;
    std::int64_t day = monday;
    while (static_cast<int>(days.size()) < count) {
        const int dow = static_cast<int>(((day / 86400) % 7 + 7) % 7);
        const int weekday = (dow + 3) % 7;  // epoch day 0 was a Thursday; 0 = Monday
        if (weekday < 5) days.push_back(day);
        day += 86400;
    }
    return days;
}

}  // namespace

Schedule default_schedule(int room_index, int days, std::uint64_t seed) {
    if (room_index < 1 || room_index > 3)
        throw ValidationError("room preset index must be 1, 2, or 3");
    if (days < 1) throw ValidationError("schedule needs at least 1 day");

    const int winter_days = (days + 1) / 2;
    const int summer_days = days - winter_days;
    const std::int64_t winter_monday = days_from_civil(2021, 12, 6) * 86400;
    const std::int64_t summer_monday = days_from_civil(2022, 6, 6) * 86400;

    Schedule sched;
    auto winter = weekdays_from(winter_monday, winter_days);
    auto summer = weekdays_from(summer_monday, summer_days);
    sched.sample_days = winter;
    sched.sample_days.insert(sched.sample_days.end(), summer.begin(), summer.end());

    rng::Engine eng(rng::derive(seed, static_cast<std::uint64_t>(room_index), 0x7363686cULL));
    const int base = kRoomBaseCount[room_index];

    constexpr std::int64_t kSlotStart[5] = {8 * 3600,          9 * 3600, 10 * 3600 + 900,
                                            11 * 3600 + 900,  13 * 3600};
    constexpr std::int64_t kLessonLen = 45 * 60;

    for (std::size_t di = 0; di < sched.sample_days.size(); ++di) {
        const std::int64_t day = sched.sample_days[di];
        const bool is_winter = di < winter.size();
        for (int slot = 0; slot < 5; ++slot) {
            const bool held = slot < 4 ? rng::uniform01(eng) >= 0.15
                                       : rng::uniform01(eng) < 0.5;
            // keep the draw sequence aligned whether or not the slot is held
            const int count =
                std::max(3, base + 4 * (static_cast<int>(rng::below(eng, 3)) - 1));
            const double u_open = rng::uniform01(eng);
            const double u_close = rng::uniform01(eng);
            if (!held) continue;

            double lesson_opening;
            if (is_winter)
                lesson_opening = u_open < 0.55 ? 0.0 : (u_open < 0.85 ? 0.25 : 1.0);
            else
                lesson_opening = u_open < 0.2 ? 0.25 : (u_open < 0.6 ? 0.5 : 1.0);
            const double close_prob = is_winter ? 0.8 : 0.5;
            const double after = u_close < close_prob ? 0.0 : lesson_opening;

            const std::int64_t start = day + kSlotStart[slot];
            sched.events.push_back({start, count, lesson_opening});
            sched.events.push_back({start + kLessonLen, 0, after});
        }
    }
    validate(sched);
    return sched;
}

}  // namespace occdet
