#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "occdet/ingest.hpp"
#include "occdet/modelsel.hpp"
#include "occdet/simulator.hpp"
#include "occdet/svm.hpp"
#include "occdet/types.hpp"

namespace occdet {

/// Everything needed to reproduce a run; embedded in every JSON artifact.
struct RunManifest {
    std::string subcommand;
    std::string tool_version;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> args;  // resolved flag -> value
};

struct ExperimentReport {
    std::string room_id;
    Task task = Task::state;
    std::int64_t interval_s = 0;
    std::uint64_t seed = 0;
    std::vector<FeatureRun> runs;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// --- CSV formats ---------------------------------------------------------
// sensor rows: timestamp,device_id,co2_a,co2_b   (empty field = missing)
// label rows:  timestamp,occupants,ventilation   (ventilation may be empty)

std::string sensor_csv(const std::vector<RawSample>& samples);
std::vector<RawSample> parse_sensor_csv(const std::string& text);

std::string label_csv(const Dataset& ds);
std::vector<LabelRow> parse_label_csv(const std::string& text);

// --- JSON formats --------------------------------------------------------

std::string room_json(const RoomInfo& room);
RoomInfo parse_room_json(const std::string& text);

std::string sim_config_json(const SimConfig& cfg);
SimConfig parse_sim_config_json(const std::string& text);

std::string schedule_json(const Schedule& sched);
Schedule parse_schedule_json(const std::string& text);

std::string model_json(const SvmModel& model, Task task);
SvmModel parse_model_json(const std::string& text);
std::pair<SvmModel, Task> parse_model_json_with_task(const std::string& text);

std::string manifest_json(const RunManifest& manifest);

std::string report_json(const ExperimentReport& report, const RunManifest& manifest);

/// Read sensor.csv, labels.csv and room.json from a directory and assemble
/// the native-interval dataset.
Dataset load_dataset_dir(const std::string& dir);

}  // namespace occdet
