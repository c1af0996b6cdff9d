#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occdet/rng.hpp"
#include "occdet/types.hpp"

namespace occdet {

/// Two-zone stratified room model. CO2 exhaled by occupants enters the upper
/// zone (thermal plumes carry it up); the zones exchange air at a base rate
/// plus a per-occupant buoyancy gain; windows and background leakage exchange
/// each zone with outdoor air.
struct SimConfig {
    RoomInfo room;
    double zone_split_m = 1.5;          // devices at or above this height read the upper zone
    double outdoor_ppm = 420.0;
    double emission_lps_per_person = 0.0035;  // pure CO2, child-scaled
    double interzone_base_m3s = 0.05;
    double interzone_per_person_m3s = 0.004;
    double window_ach_open = 8.0;       // air changes per hour, windows fully open
    double infiltration_ach = 0.3;      // background leakage, always on
    double sensor_noise_sd_ppm = 10.0;
    double noise_clip_ppm = 30.0;
    double near_window_m = 1.0;         // devices this close to the window feel the draft
    double near_window_blend = 0.3;     // fraction pulled toward outdoor at full opening
    double dt_s = 15.0;
    std::int64_t sample_interval_s = 15;
    std::int64_t sample_day_start_s = 7 * 3600;   // sampling window within a day, UTC
    std::int64_t sample_day_end_s = 17 * 3600;
    std::uint64_t seed = 0;
};

/// Throws ValidationError naming the offending field.
void validate(const SimConfig& cfg);

/// From this instant until the next event, the room holds `occupants` people
/// with the windows at `opening`.
struct ScheduleEvent {
    std::int64_t t = 0;
    int occupants = 0;
    double opening = 0.0;
};

struct Schedule {
    std::vector<ScheduleEvent> events;       // strictly increasing t
    std::vector<std::int64_t> sample_days;   // midnight timestamps of days to sample
};

/// Enforces event ordering, bounds, and the behavioral rule that the window
/// state only changes while the room is occupied.
void validate(const Schedule& sched);

struct ZoneState {
    double lower_ppm = 0.0;
    double upper_ppm = 0.0;
};

/// One explicit-Euler step of the two-zone mass balance.
ZoneState step(const ZoneState& state, const SimConfig& cfg, int occupants, double opening,
               double dt);

/// Noisy per-device readings for the current state: zone concentration,
/// a draft correction for near-window devices while the window is open, and
/// clipped Gaussian sensor noise. Two sensor values per device.
std::vector<std::pair<double, double>> sample_sensors(const ZoneState& state,
                                                      const SimConfig& cfg, double opening,
                                                      rng::Engine& eng);

struct SimOutput {
    Dataset dataset;                 // native-interval, gap-free
    std::vector<RawSample> samples;  // the same data as raw sensor rows
};

/// Integrate the schedule and emit samples on the native grid within the
/// sampling window of each scheduled day. Deterministic for a fixed seed.
SimOutput generate(const SimConfig& cfg, const Schedule& sched);

/// The three bundled classroom presets (1-based index).
SimConfig default_config(int room_index);

/// A two-season school timetable: `days` weekdays split between a December
/// and a June week block, with lessons, breaks, and window behavior derived
/// deterministically from the seed.
Schedule default_schedule(int room_index, int days, std::uint64_t seed);

}  // namespace occdet
