#include "lcd/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lcd/csv.hpp"
#include "lcd/errors.hpp"

namespace lcd {

namespace {

double parse_double(const std::string& s, std::size_t row) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw MalformedRow("non-numeric value '" + s + "'", row);
    }
}

long long parse_ll(const std::string& s, std::size_t row) {
    try {
        std::size_t pos = 0;
        // tolerate integer ids written with a decimal point
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return std::llround(v);
    } catch (const std::exception&) {
        throw MalformedRow("non-integer value '" + s + "'", row);
    }
}

// Resolved column access for one file: canonical name -> (index, scale).
class FieldReader {
public:
    FieldReader(const CsvTable& table, const std::map<std::string, ColumnSpec>& mapping)
        : table_(table) {
        for (const auto& [field, spec] : mapping) {
            auto idx = table.column(spec.source);
            if (!idx) throw MissingColumn(spec.source);
            resolved_[field] = {*idx, spec.scale};
        }
    }

    bool has(const std::string& field) const { return resolved_.count(field) != 0; }

    const std::string& raw(const std::string& field, std::size_t row) const {
        return table_.rows[row][resolved_.at(field).first];
    }

    double number(const std::string& field, std::size_t row) const {
        const auto& [idx, scale] = resolved_.at(field);
        return parse_double(table_.rows[row][idx], row) * scale;
    }

    long long integer(const std::string& field, std::size_t row) const {
        return parse_ll(table_.rows[row][resolved_.at(field).first], row);
    }

private:
    const CsvTable& table_;
    std::map<std::string, std::pair<std::size_t, double>> resolved_;
};

std::vector<double> parse_boundary_list(const std::string& s, double scale) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item) * scale);
    }
    return out;
}

std::string format_boundary_list(const std::vector<double>& b) {
    std::ostringstream os;
    os.precision(12);
    for (std::size_t i = 0; i < b.size(); ++i) os << b[i] << (i + 1 < b.size() ? ";" : "");
    return os.str();
}

void central_differences(std::vector<TrackFrame>& traj, double frame_rate,
                         double TrackFrame::* src, double TrackFrame::* dst) {
    const std::size_t n = traj.size();
    if (n == 1) {
        traj[0].*dst = 0.0;
        return;
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            out[i] = (traj[1].*src - traj[0].*src) * frame_rate;
        } else if (i + 1 == n) {
            out[i] = (traj[n - 1].*src - traj[n - 2].*src) * frame_rate;
        } else {
            out[i] = (traj[i + 1].*src - traj[i - 1].*src) * 0.5 * frame_rate;
        }
    }
    for (std::size_t i = 0; i < n; ++i) traj[i].*dst = out[i];
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

std::string vehicle_class_name(VehicleClass c) {
    return c == VehicleClass::PassengerCar ? "Car" : "Truck";
}

VehicleClass vehicle_class_from_name(const std::string& name) {
    if (name == "Car" || name == "car" || name == "PassengerCar") return VehicleClass::PassengerCar;
    if (name == "Truck" || name == "truck" || name == "HeavyVehicle")
        return VehicleClass::HeavyVehicle;
    throw DataError("unknown vehicle class: " + name);
}

void RecordingMeta::validate() const {
    if (!(frame_rate > 0.0)) throw DataError("frame_rate must be positive");
    for (const auto& dir : lane_boundaries) {
        bool inc = true, dec = true;
        for (std::size_t i = 1; i < dir.size(); ++i) {
            inc = inc && dir[i] > dir[i - 1];
            dec = dec && dir[i] < dir[i - 1];
        }
        if (dir.size() > 1 && !inc && !dec) {
            throw DataError("lane boundaries must be strictly monotone");
        }
    }
}

void VehicleMeta::validate() const {
    if (!(length > 0.0) || !(width > 0.0)) {
        throw DataError("vehicle dimensions must be positive");
    }
}

ColumnMap ColumnMap::highd_default() {
    ColumnMap m;
    m.tracks = {{"frame", {"frame"}},
                {"vehicle_id", {"id"}},
                {"longitudinal_position", {"x"}},
                {"lateral_position", {"y"}},
                {"longitudinal_velocity", {"xVelocity"}},
                {"lateral_velocity", {"yVelocity"}},
                {"longitudinal_acceleration", {"xAcceleration"}},
                {"lateral_acceleration", {"yAcceleration"}},
                {"lane_id", {"laneId"}},
                {"preceding_vehicle_id", {"precedingId"}},
                {"time_headway", {"thw"}},
                {"distance_headway", {"dhw"}}};
    // HighD tracksMeta: "width"/"height" are the vehicle footprint along/
    // across the road, i.e. length and width here
    m.vehicle_meta = {{"vehicle_id", {"id"}},
                      {"vehicle_class", {"class"}},
                      {"length", {"width"}},
                      {"width", {"height"}},
                      {"driving_direction", {"drivingDirection"}}};
    m.recording_meta = {{"recording_id", {"id"}},
                        {"frame_rate", {"frameRate"}},
                        {"location_id", {"locationId"}},
                        {"lane_boundaries", {"upperLaneMarkings"}},
                        {"lane_boundaries_2", {"lowerLaneMarkings"}}};
    return m;
}

ColumnMap canonical_column_map() {
    ColumnMap m;
    for (const char* f :
         {"frame", "vehicle_id", "longitudinal_position", "lateral_position",
          "longitudinal_velocity", "lateral_velocity", "longitudinal_acceleration",
          "lateral_acceleration", "lane_id", "preceding_vehicle_id", "time_headway",
          "distance_headway"}) {
        m.tracks[f] = {f};
    }
    for (const char* f : {"vehicle_id", "vehicle_class", "length", "width", "driving_direction"}) {
        m.vehicle_meta[f] = {f};
    }
    for (const char* f :
         {"recording_id", "frame_rate", "location_id", "lane_boundaries", "lane_boundaries_2"}) {
        m.recording_meta[f] = {f};
    }
    return m;
}

namespace {
std::map<std::string, ColumnSpec> column_section(const nlohmann::json& j) {
    std::map<std::string, ColumnSpec> out;
    for (const auto& [key, value] : j.items()) {
        ColumnSpec spec;
        if (value.is_string()) {
            spec.source = value.get<std::string>();
        } else {
            spec.source = value.at("column").get<std::string>();
            if (value.contains("scale")) spec.scale = value.at("scale").get<double>();
        }
        out[key] = spec;
    }
    return out;
}
}  // namespace

ColumnMap ColumnMap::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open column map: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("column map parse error: " + std::string(e.what()));
    }
    ColumnMap m;
    if (j.contains("tracks")) m.tracks = column_section(j["tracks"]);
    if (j.contains("vehicle_meta")) m.vehicle_meta = column_section(j["vehicle_meta"]);
    if (j.contains("recording_meta")) m.recording_meta = column_section(j["recording_meta"]);
    return m;
}

Recording load_recording(const std::string& track_path, const std::string& vehicle_meta_path,
                         const std::string& recording_meta_path, const ColumnMap& column_map) {
    Recording rec;

    // recording meta: one data row
    {
        CsvTable table = read_csv(recording_meta_path);
        if (table.rows.empty()) throw EmptyRecording("no rows in " + recording_meta_path);
        FieldReader fields(table, column_map.recording_meta);
        for (const char* req : {"recording_id", "frame_rate", "location_id"}) {
            if (!fields.has(req)) throw MissingColumn(req);
        }
        rec.meta.recording_id = fields.integer("recording_id", 0);
        rec.meta.frame_rate = fields.number("frame_rate", 0);
        rec.meta.location_id = fields.integer("location_id", 0);
        for (const char* bf : {"lane_boundaries", "lane_boundaries_2"}) {
            if (fields.has(bf)) {
                const std::string& raw = fields.raw(bf, 0);
                if (!raw.empty()) rec.meta.lane_boundaries.push_back(parse_boundary_list(raw, 1.0));
            }
        }
        rec.meta.validate();
    }

    // vehicle meta
    {
        CsvTable table = read_csv(vehicle_meta_path);
        FieldReader fields(table, column_map.vehicle_meta);
        for (const char* req : {"vehicle_id", "vehicle_class", "length", "width"}) {
            if (!fields.has(req)) throw MissingColumn(req);
        }
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            VehicleMeta vm;
            vm.vehicle_id = fields.integer("vehicle_id", r);
            vm.vehicle_class = vehicle_class_from_name(fields.raw("vehicle_class", r));
            vm.length = fields.number("length", r);
            vm.width = fields.number("width", r);
            if (fields.has("driving_direction")) {
                long long d = fields.integer("driving_direction", r);
                vm.driving_direction = d >= 1 ? static_cast<int>(d - 1) : 0;
            }
            vm.validate();
            rec.vehicles[vm.vehicle_id] = vm;
        }
    }

    // tracks
    {
        CsvTable table = read_csv(track_path);
        if (table.rows.empty()) throw EmptyRecording("no track rows in " + track_path);
        FieldReader fields(table, column_map.tracks);
        for (const char* req :
             {"frame", "vehicle_id", "longitudinal_position", "lateral_position", "lane_id"}) {
            if (!fields.has(req)) throw MissingColumn(req);
        }
        const bool has_vx = fields.has("longitudinal_velocity");
        const bool has_vy = fields.has("lateral_velocity");
        const bool has_ax = fields.has("longitudinal_acceleration");
        const bool has_ay = fields.has("lateral_acceleration");
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            TrackFrame f;
            f.frame = fields.integer("frame", r);
            f.vehicle_id = fields.integer("vehicle_id", r);
            f.longitudinal_position = fields.number("longitudinal_position", r);
            f.lateral_position = fields.number("lateral_position", r);
            f.lane_id = fields.integer("lane_id", r);
            if (has_vx) f.longitudinal_velocity = fields.number("longitudinal_velocity", r);
            if (has_vy) f.lateral_velocity = fields.number("lateral_velocity", r);
            if (has_ax) f.longitudinal_acceleration = fields.number("longitudinal_acceleration", r);
            if (has_ay) f.lateral_acceleration = fields.number("lateral_acceleration", r);
            if (fields.has("preceding_vehicle_id")) {
                const std::string& raw = fields.raw("preceding_vehicle_id", r);
                if (!raw.empty()) {
                    long long pid = parse_ll(raw, r);
                    if (pid > 0) f.preceding_vehicle_id = pid;
                }
            }
            if (f.preceding_vehicle_id) {
                // 0 / negative headway is the "no measurement" sentinel
                if (fields.has("time_headway")) {
                    const std::string& raw = fields.raw("time_headway", r);
                    if (!raw.empty()) {
                        double v = fields.number("time_headway", r);
                        if (v > 0.0) f.time_headway = v;
                    }
                }
                if (fields.has("distance_headway")) {
                    const std::string& raw = fields.raw("distance_headway", r);
                    if (!raw.empty()) {
                        double v = fields.number("distance_headway", r);
                        if (v > 0.0) f.distance_headway = v;
                    }
                }
            }
            rec.trajectories[f.vehicle_id].push_back(f);
        }

        for (auto& [vid, traj] : rec.trajectories) {
            if (rec.vehicles.find(vid) == rec.vehicles.end()) {
                throw DataError("track vehicle " + std::to_string(vid) + " has no meta entry");
            }
            std::sort(traj.begin(), traj.end(),
                      [](const TrackFrame& a, const TrackFrame& b) { return a.frame < b.frame; });
            for (std::size_t i = 1; i < traj.size(); ++i) {
                if (traj[i].frame == traj[i - 1].frame) {
                    throw InconsistentFrames("duplicate frame " + std::to_string(traj[i].frame) +
                                             " for vehicle " + std::to_string(vid));
                }
            }
            if (!has_vx) {
                central_differences(traj, rec.meta.frame_rate,
                                    &TrackFrame::longitudinal_position,
                                    &TrackFrame::longitudinal_velocity);
            }
            if (!has_vy) {
                central_differences(traj, rec.meta.frame_rate, &TrackFrame::lateral_position,
                                    &TrackFrame::lateral_velocity);
            }
            if (!has_ax) {
                central_differences(traj, rec.meta.frame_rate,
                                    &TrackFrame::longitudinal_velocity,
                                    &TrackFrame::longitudinal_acceleration);
            }
            if (!has_ay) {
                central_differences(traj, rec.meta.frame_rate, &TrackFrame::lateral_velocity,
                                    &TrackFrame::lateral_acceleration);
            }
        }
    }

    if (rec.trajectories.empty()) throw EmptyRecording("recording has no trajectories");
    return rec;
}

void save_recording(const Recording& rec, const std::string& track_path,
                    const std::string& vehicle_meta_path,
                    const std::string& recording_meta_path) {
    {
        std::vector<std::string> header = {"recording_id", "frame_rate", "location_id",
                                           "lane_boundaries", "lane_boundaries_2"};
        std::vector<std::string> row = {std::to_string(rec.meta.recording_id),
                                        num(rec.meta.frame_rate),
                                        std::to_string(rec.meta.location_id), "", ""};
        if (!rec.meta.lane_boundaries.empty()) {
            row[3] = format_boundary_list(rec.meta.lane_boundaries[0]);
        }
        if (rec.meta.lane_boundaries.size() > 1) {
            row[4] = format_boundary_list(rec.meta.lane_boundaries[1]);
        }
        write_csv(recording_meta_path, header, {row});
    }
    {
        std::vector<std::string> header = {"vehicle_id", "vehicle_class", "length", "width",
                                           "driving_direction"};
        std::vector<std::vector<std::string>> rows;
        for (const auto& [vid, vm] : rec.vehicles) {
            rows.push_back({std::to_string(vid), vehicle_class_name(vm.vehicle_class),
                            num(vm.length), num(vm.width),
                            std::to_string(vm.driving_direction + 1)});
        }
        write_csv(vehicle_meta_path, header, rows);
    }
    {
        std::vector<std::string> header = {
            "frame", "vehicle_id", "longitudinal_position", "lateral_position",
            "longitudinal_velocity", "lateral_velocity", "longitudinal_acceleration",
            "lateral_acceleration", "lane_id", "preceding_vehicle_id", "time_headway",
            "distance_headway"};
        std::vector<std::vector<std::string>> rows;
        for (const auto& [vid, traj] : rec.trajectories) {
            for (const auto& f : traj) {
                rows.push_back(
                    {std::to_string(f.frame), std::to_string(vid),
                     num(f.longitudinal_position), num(f.lateral_position),
                     num(f.longitudinal_velocity), num(f.lateral_velocity),
                     num(f.longitudinal_acceleration), num(f.lateral_acceleration),
                     std::to_string(f.lane_id),
                     f.preceding_vehicle_id ? std::to_string(*f.preceding_vehicle_id) : "",
                     f.time_headway ? num(*f.time_headway) : "",
                     f.distance_headway ? num(*f.distance_headway) : ""});
            }
        }
        write_csv(track_path, header, rows);
    }
}

std::vector<ValidationFinding> validate_recording(const Recording& rec) {
    std::vector<ValidationFinding> findings;
    for (const auto& [vid, traj] : rec.trajectories) {
        for (std::size_t i = 1; i < traj.size(); ++i) {
            if (traj[i].frame != traj[i - 1].frame + 1) {
                findings.push_back({FindingKind::FrameGap, vid, traj[i].frame,
                                    "gap before frame " + std::to_string(traj[i].frame)});
            }
        }
        for (const auto& f : traj) {
            if (!f.preceding_vehicle_id && (f.time_headway || f.distance_headway)) {
                findings.push_back({FindingKind::OrphanHeadway, vid, f.frame,
                                    "headway present without preceding vehicle"});
            }
        }
        auto it = rec.vehicles.find(vid);
        int dir = it != rec.vehicles.end() ? it->second.driving_direction : 0;
        if (dir >= 0 && static_cast<std::size_t>(dir) < rec.meta.lane_boundaries.size() &&
            rec.meta.lane_boundaries[dir].size() >= 2) {
            const auto& b = rec.meta.lane_boundaries[dir];
            double lo = std::min(b.front(), b.back());
            double hi = std::max(b.front(), b.back());
            for (const auto& f : traj) {
                if (f.lateral_position < lo || f.lateral_position > hi) {
                    findings.push_back({FindingKind::OutOfLaneBounds, vid, f.frame,
                                        "lateral position outside lane boundaries"});
                }
            }
        }
    }
    return findings;
}

std::vector<double> lane_boundaries_for(const Recording& rec, int direction) {
    if (direction >= 0 && static_cast<std::size_t>(direction) < rec.meta.lane_boundaries.size() &&
        rec.meta.lane_boundaries[direction].size() >= 2) {
        return rec.meta.lane_boundaries[direction];
    }
    // estimate: midpoints between per-lane median lateral positions
    std::map<long long, std::vector<double>> per_lane;
    for (const auto& [vid, traj] : rec.trajectories) {
        auto it = rec.vehicles.find(vid);
        if (it == rec.vehicles.end() || it->second.driving_direction != direction) continue;
        for (const auto& f : traj) per_lane[f.lane_id].push_back(f.lateral_position);
    }
    std::vector<double> medians;
    for (auto& [lane, ys] : per_lane) {
        std::sort(ys.begin(), ys.end());
        medians.push_back(ys[ys.size() / 2]);
    }
    std::sort(medians.begin(), medians.end());
    if (medians.size() < 2) {
        throw NoLaneBoundaries("cannot estimate boundaries: fewer than two lanes observed");
    }
    std::vector<double> bounds;
    for (std::size_t i = 1; i < medians.size(); ++i) {
        bounds.push_back(0.5 * (medians[i - 1] + medians[i]));
    }
    return bounds;
}

}  // namespace lcd
