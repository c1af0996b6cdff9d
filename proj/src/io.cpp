#include "occdet/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "occdet/timeutil.hpp"

namespace occdet {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ValidationError("short write to '" + path + "'");
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, p};
}

double parse_double(std::string_view s, std::size_t line, const char* what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ValidationError("line " + std::to_string(line) + ": bad " + what + " '" +
                              std::string(s) + "'");
    return v;
}

long parse_long(std::string_view s, std::size_t line, const char* what) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ValidationError("line " + std::to_string(line) + ": bad " + what + " '" +
                              std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

// Iterate non-empty lines, stripping trailing \r.
template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (!line.empty()) fn(line, line_no);
        pos = end + 1;
    }
}

}  // namespace

std::string sensor_csv(const std::vector<RawSample>& samples) {
    std::string out = "timestamp,device_id,co2_a,co2_b\n";
    for (const auto& s : samples) {
        out += format_iso8601_utc(s.timestamp);
        out += ',';
        out += s.device_id;
        out += ',';
        if (!is_missing(s.co2_a)) out += fmt_double(s.co2_a);
        out += ',';
        if (!is_missing(s.co2_b)) out += fmt_double(s.co2_b);
        out += '\n';
    }
    return out;
}

std::vector<RawSample> parse_sensor_csv(const std::string& text) {
    std::vector<RawSample> samples;
    bool header_seen = false;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (!header_seen) {
            if (line != "timestamp,device_id,co2_a,co2_b")
                throw ValidationError("sensor csv line 1: unexpected header '" +
                                      std::string(line) + "'");
            header_seen = true;
            return;
        }
        const auto f = split_line(line);
        if (f.size() != 4)
            throw ValidationError("sensor csv line " + std::to_string(line_no) +
                                  ": expected 4 fields, got " + std::to_string(f.size()));
        RawSample s;
        s.timestamp = parse_iso8601_utc(f[0]);
        s.device_id = std::string(f[1]);
        if (s.device_id.empty())
            throw ValidationError("sensor csv line " + std::to_string(line_no) +
                                  ": empty device_id");
        s.co2_a = f[2].empty() ? kMissing : parse_double(f[2], line_no, "co2_a");
        s.co2_b = f[3].empty() ? kMissing : parse_double(f[3], line_no, "co2_b");
        samples.push_back(std::move(s));
    });
    if (!header_seen) throw ValidationError("sensor csv is empty");
    return samples;
}

std::string label_csv(const Dataset& ds) {
    std::string out = "timestamp,occupants,ventilation\n";
    for (std::size_t i = 0; i < ds.grid.size(); ++i) {
        out += format_iso8601_utc(ds.grid[i]);
        out += ',';
        out += std::to_string(ds.labels[i]);
        out += ',';
        if (ds.has_ventilation()) out += fmt_double(ds.ventilation[i]);
        out += '\n';
    }
    return out;
}

std::vector<LabelRow> parse_label_csv(const std::string& text) {
    std::vector<LabelRow> rows;
    bool header_seen = false;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (!header_seen) {
            if (line != "timestamp,occupants,ventilation")
                throw ValidationError("label csv line 1: unexpected header '" +
                                      std::string(line) + "'");
            header_seen = true;
            return;
        }
        const auto f = split_line(line);
        if (f.size() != 3)
            throw ValidationError("label csv line " + std::to_string(line_no) +
                                  ": expected 3 fields, got " + std::to_string(f.size()));
        LabelRow row;
        row.timestamp = parse_iso8601_utc(f[0]);
        const long occ = parse_long(f[1], line_no, "occupants");
        if (occ < 0)
            throw ValidationError("label csv line " + std::to_string(line_no) +
                                  ": occupants must be non-negative");
        row.occupants = static_cast<int>(occ);
        row.ventilation = f[2].empty() ? kMissing : parse_double(f[2], line_no, "ventilation");
        rows.push_back(row);
    });
    if (!header_seen) throw ValidationError("label csv is empty");
    return rows;
}

namespace {

json device_to_json(const DeviceMeta& d) {
    json j{{"device_id", d.device_id},
           {"height_m", d.height_m},
           {"distance_to_window_m", d.distance_to_window_m}};
    if (!d.position.empty()) j["position"] = d.position;
    if (d.x_m) j["x_m"] = *d.x_m;
    if (d.y_m) j["y_m"] = *d.y_m;
    return j;
}

DeviceMeta device_from_json(const json& j) {
    DeviceMeta d;
    d.device_id = j.at("device_id").get<std::string>();
    d.height_m = j.at("height_m").get<double>();
    d.distance_to_window_m = j.at("distance_to_window_m").get<double>();
    if (j.contains("position")) d.position = j["position"].get<std::string>();
    if (j.contains("x_m")) d.x_m = j["x_m"].get<double>();
    if (j.contains("y_m")) d.y_m = j["y_m"].get<double>();
    return d;
}

json room_to_json(const RoomInfo& room) {
    json devices = json::array();
    for (const auto& d : room.devices) devices.push_back(device_to_json(d));
    return json{{"room_id", room.room_id},
                {"length_m", room.length_m},
                {"width_m", room.width_m},
                {"height_m", room.height_m},
                {"devices", devices}};
}

RoomInfo room_from_json(const json& j) {
    RoomInfo room;
    room.room_id = j.at("room_id").get<std::string>();
    room.length_m = j.at("length_m").get<double>();
    room.width_m = j.at("width_m").get<double>();
    room.height_m = j.at("height_m").get<double>();
    for (const auto& d : j.at("devices")) room.devices.push_back(device_from_json(d));
    return room;
}

json parse_json_text(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ValidationError(std::string("malformed ") + what + " JSON");
    return j;
}

}  // namespace

std::string room_json(const RoomInfo& room) { return room_to_json(room).dump(2) + "\n"; }

RoomInfo parse_room_json(const std::string& text) {
    try {
        return room_from_json(parse_json_text(text, "room"));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("room JSON: ") + e.what());
    }
}

std::string sim_config_json(const SimConfig& cfg) {
    json j{{"room", room_to_json(cfg.room)},
           {"zone_split_m", cfg.zone_split_m},
           {"outdoor_ppm", cfg.outdoor_ppm},
           {"emission_lps_per_person", cfg.emission_lps_per_person},
           {"interzone_base_m3s", cfg.interzone_base_m3s},
           {"interzone_per_person_m3s", cfg.interzone_per_person_m3s},
           {"window_ach_open", cfg.window_ach_open},
           {"infiltration_ach", cfg.infiltration_ach},
           {"sensor_noise_sd_ppm", cfg.sensor_noise_sd_ppm},
           {"noise_clip_ppm", cfg.noise_clip_ppm},
           {"near_window_m", cfg.near_window_m},
           {"near_window_blend", cfg.near_window_blend},
           {"dt_s", cfg.dt_s},
           {"sample_interval_s", cfg.sample_interval_s},
           {"sample_day_start_s", cfg.sample_day_start_s},
           {"sample_day_end_s", cfg.sample_day_end_s},
           {"seed", cfg.seed}};
    return j.dump(2) + "\n";
}

SimConfig parse_sim_config_json(const std::string& text) {
    try {
        const json j = parse_json_text(text, "sim config");
        SimConfig cfg;
        cfg.room = room_from_json(j.at("room"));
        auto opt = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
        };
        opt("zone_split_m", cfg.zone_split_m);
        opt("outdoor_ppm", cfg.outdoor_ppm);
        opt("emission_lps_per_person", cfg.emission_lps_per_person);
        opt("interzone_base_m3s", cfg.interzone_base_m3s);
        opt("interzone_per_person_m3s", cfg.interzone_per_person_m3s);
        opt("window_ach_open", cfg.window_ach_open);
        opt("infiltration_ach", cfg.infiltration_ach);
        opt("sensor_noise_sd_ppm", cfg.sensor_noise_sd_ppm);
        opt("noise_clip_ppm", cfg.noise_clip_ppm);
        opt("near_window_m", cfg.near_window_m);
        opt("near_window_blend", cfg.near_window_blend);
        opt("dt_s", cfg.dt_s);
        opt("sample_interval_s", cfg.sample_interval_s);
        opt("sample_day_start_s", cfg.sample_day_start_s);
        opt("sample_day_end_s", cfg.sample_day_end_s);
        opt("seed", cfg.seed);
        return cfg;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("sim config JSON: ") + e.what());
    }
}

std::string schedule_json(const Schedule& sched) {
    json events = json::array();
    for (const auto& e : sched.events)
        events.push_back(json{{"time", format_iso8601_utc(e.t)},
                              {"occupants", e.occupants},
                              {"opening", e.opening}});
    json days = json::array();
    for (auto d : sched.sample_days) days.push_back(format_iso8601_utc(d).substr(0, 10));
    return json{{"events", events}, {"sample_days", days}}.dump(2) + "\n";
}

Schedule parse_schedule_json(const std::string& text) {
    try {
        const json j = parse_json_text(text, "schedule");
        Schedule sched;
        for (const auto& e : j.at("events"))
            sched.events.push_back({parse_iso8601_utc(e.at("time").get<std::string>()),
                                    e.at("occupants").get<int>(),
                                    e.at("opening").get<double>()});
        for (const auto& d : j.at("sample_days")) {
            const std::string day = d.get<std::string>();
            sched.sample_days.push_back(parse_iso8601_utc(day + "T00:00:00Z"));
        }
        return sched;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("schedule JSON: ") + e.what());
    }
}

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (double v : m.row(r)) row.push_back(v);
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    const std::size_t rows = j.size();
    const std::size_t cols = rows == 0 ? 0 : j.at(0).size();
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m.at(r, c) = j.at(r).at(c).get<double>();
    return m;
}

constexpr int kModelFormatVersion = 1;

}  // namespace

std::string model_json(const SvmModel& model, Task task) {
    json pairs = json::array();
    for (const auto& p : model.pairs)
        pairs.push_back(json{{"class_pos", p.class_pos},
                             {"class_neg", p.class_neg},
                             {"support_vectors", matrix_to_json(p.support_vectors)},
                             {"coef", p.coef},
                             {"bias", p.bias},
                             {"dual_objective", p.dual_objective},
                             {"converged", p.converged}});
    json j{{"format", "occdet-svm"},
           {"format_version", kModelFormatVersion},
           {"kernel", "rbf"},
           {"task", task_name(task)},
           {"gamma", model.params.gamma},
           {"c", model.params.c},
           {"classes", model.classes},
           {"feature_names", model.feature_names},
           {"norm", json{{"min", model.norm.min},
                         {"max", model.norm.max},
                         {"source", model.norm.source}}},
           {"pairs", pairs}};
    return j.dump(2) + "\n";
}

std::pair<SvmModel, Task> parse_model_json_with_task(const std::string& text) {
    try {
        const json j = parse_json_text(text, "model");
        if (j.at("format").get<std::string>() != "occdet-svm" ||
            j.at("format_version").get<int>() != kModelFormatVersion)
            throw ValidationError("unsupported model format");
        SvmModel model;
        const Task task = task_from_name(j.at("task").get<std::string>());
        model.params.gamma = j.at("gamma").get<double>();
        model.params.c = j.at("c").get<double>();
        model.classes = j.at("classes").get<std::vector<int>>();
        model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        model.norm.min = j.at("norm").at("min").get<std::vector<double>>();
        model.norm.max = j.at("norm").at("max").get<std::vector<double>>();
        model.norm.source = j.at("norm").at("source").get<std::string>();
        for (const auto& p : j.at("pairs")) {
            BinaryModel b;
            b.class_pos = p.at("class_pos").get<int>();
            b.class_neg = p.at("class_neg").get<int>();
            b.support_vectors = matrix_from_json(p.at("support_vectors"));
            b.coef = p.at("coef").get<std::vector<double>>();
            b.bias = p.at("bias").get<double>();
            b.dual_objective = p.at("dual_objective").get<double>();
            b.converged = p.at("converged").get<bool>();
            model.pairs.push_back(std::move(b));
        }
        return {std::move(model), task};
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model JSON: ") + e.what());
    }
}

SvmModel parse_model_json(const std::string& text) {
    return parse_model_json_with_task(text).first;
}

namespace {

json manifest_to_json(const RunManifest& m) {
    return json{{"tool", "occdet"},
                {"tool_version", m.tool_version},
                {"subcommand", m.subcommand},
                {"seed", m.seed},
                {"args", m.args}};
}

json importance_to_json(const ImportanceReport& imp) {
    json features = json::array();
    for (std::size_t i = 0; i < imp.features.size(); ++i)
        features.push_back(json{{"feature", imp.features[i]},
                                {"mean_importance", imp.mean_drop[i]},
                                {"sd", imp.sd[i]}});
    return json{{"n_repeats", imp.n_repeats},
                {"baseline_accuracy", imp.baseline_accuracy},
                {"features", features}};
}

json aggregate_to_json(const Aggregate& a) {
    return json{{"mean", a.mean}, {"sd", a.sd}};
}

}  // namespace

std::string manifest_json(const RunManifest& manifest) {
    return manifest_to_json(manifest).dump(2) + "\n";
}

std::string report_json(const ExperimentReport& report, const RunManifest& manifest) {
    json runs = json::array();
    for (const auto& run : report.runs) {
        json rounds = json::array();
        for (const auto& r : run.rounds) {
            json jr{{"accuracy", r.metrics.accuracy},
                    {"precision", r.metrics.precision},
                    {"recall", r.metrics.recall},
                    {"f1", r.metrics.f1},
                    {"rmse", r.metrics.rmse},
                    {"nrmse", r.metrics.nrmse},
                    {"c", r.chosen_c},
                    {"gamma", r.chosen_gamma},
                    {"c_exp", r.chosen_c_exp},
                    {"gamma_exp", r.chosen_g_exp},
                    {"expansions", r.expansions},
                    {"hit_expansion_limit", r.hit_expansion_limit},
                    {"converged", r.converged},
                    {"warnings", r.warnings}};
            if (r.importance.n_repeats > 0)
                jr["importance"] = importance_to_json(r.importance);
            rounds.push_back(std::move(jr));
        }
        runs.push_back(json{{"features", run.feature_names},
                            {"rounds", rounds},
                            {"aggregate",
                             json{{"accuracy", aggregate_to_json(run.accuracy)},
                                  {"precision", aggregate_to_json(run.precision)},
                                  {"recall", aggregate_to_json(run.recall)},
                                  {"f1", aggregate_to_json(run.f1)},
                                  {"rmse", aggregate_to_json(run.rmse)},
                                  {"nrmse", aggregate_to_json(run.nrmse)}}}});
    }
    json j{{"manifest", manifest_to_json(manifest)},
           {"room_id", report.room_id},
           {"task", task_name(report.task)},
           {"interval_s", report.interval_s},
           {"seed", report.seed},
           {"runs", runs}};
    return j.dump(2) + "\n";
}

Dataset load_dataset_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    const auto sensor_path = (fs::path(dir) / "sensors.csv").string();
    const auto label_path = (fs::path(dir) / "labels.csv").string();
    const auto room_path = (fs::path(dir) / "room.json").string();
    const auto samples = parse_sensor_csv(read_file(sensor_path));
    const auto labels = parse_label_csv(read_file(label_path));
    const auto room = parse_room_json(read_file(room_path));
    return build_dataset(samples, labels, room);
}

}  // namespace occdet
