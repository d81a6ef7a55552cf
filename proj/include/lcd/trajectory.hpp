#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lcd {

enum class VehicleClass { PassengerCar, HeavyVehicle };

std::string vehicle_class_name(VehicleClass c);
VehicleClass vehicle_class_from_name(const std::string& name);

struct RecordingMeta {
    long long recording_id = 0;
    double frame_rate = 0.0;
    long long location_id = 0;
    // lateral positions separating lanes, one strictly monotone list per
    // driving direction; may be empty (estimated on demand)
    std::vector<std::vector<double>> lane_boundaries;

    void validate() const;
};

struct VehicleMeta {
    long long vehicle_id = 0;
    VehicleClass vehicle_class = VehicleClass::PassengerCar;
    double length = 0.0;
    double width = 0.0;
    int driving_direction = 0;  // index into lane_boundaries

    void validate() const;
};

struct TrackFrame {
    long long frame = 0;
    long long vehicle_id = 0;
    double longitudinal_position = 0.0;
    double lateral_position = 0.0;
    double longitudinal_velocity = 0.0;
    double lateral_velocity = 0.0;
    double longitudinal_acceleration = 0.0;
    double lateral_acceleration = 0.0;
    long long lane_id = 0;
    std::optional<long long> preceding_vehicle_id;
    std::optional<double> time_headway;
    std::optional<double> distance_headway;
};

struct Recording {
    RecordingMeta meta;
    std::map<long long, VehicleMeta> vehicles;
    std::map<long long, std::vector<TrackFrame>> trajectories;
};

struct ColumnSpec {
    std::string source;
    double scale = 1.0;
};

// canonical field -> source column (+ optional multiplier), one map per file
struct ColumnMap {
    std::map<std::string, ColumnSpec> tracks;
    std::map<std::string, ColumnSpec> vehicle_meta;
    std::map<std::string, ColumnSpec> recording_meta;

    // shipped default matching the public HighD column names
    static ColumnMap highd_default();
    static ColumnMap from_json_file(const std::string& path);
};

Recording load_recording(const std::string& track_path, const std::string& vehicle_meta_path,
                         const std::string& recording_meta_path, const ColumnMap& column_map);

// canonical CSV layout, round-trips through load_recording with the
// canonical column map
void save_recording(const Recording& rec, const std::string& track_path,
                    const std::string& vehicle_meta_path,
                    const std::string& recording_meta_path);

// column map whose source names are the canonical field names
ColumnMap canonical_column_map();

enum class FindingKind { FrameGap, OrphanHeadway, OutOfLaneBounds };

struct ValidationFinding {
    FindingKind kind = FindingKind::FrameGap;
    long long vehicle_id = 0;
    long long frame = 0;
    std::string message;
};

std::vector<ValidationFinding> validate_recording(const Recording& rec);

// Lane boundaries for a driving direction: recording meta when present,
// else midpoints between per-lane median lateral positions.
std::vector<double> lane_boundaries_for(const Recording& rec, int direction);

}  // namespace lcd
