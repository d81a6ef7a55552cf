#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lcd/trajectory.hpp"

namespace lcd {

struct ExtractionParams {
    double lateral_speed_threshold = 0.20;  // m/s
    double hysteresis_fraction = 0.5;       // in (0,1]
    double smoothing_window = 0.4;          // s, centered moving average
    double min_duration = 1.0;              // s
    double max_duration = 16.0;             // s
    bool require_lane_id_change = true;

    void validate() const;
};

enum class LcDirection { Left, Right };

std::string lc_direction_name(LcDirection d);
LcDirection lc_direction_from_name(const std::string& name);

struct LaneChangeEvent {
    long long recording_id = 0;
    long long vehicle_id = 0;
    VehicleClass vehicle_class = VehicleClass::PassengerCar;
    LcDirection direction = LcDirection::Left;
    long long start_frame = 0;
    long long end_frame = 0;
    double duration = 0.0;  // (end_frame - start_frame) / frame_rate
    double speed_at_start = 0.0;
    std::optional<double> time_headway_at_start;
    std::optional<double> distance_headway_at_start;
    long long origin_lane = 0;
    long long target_lane = 0;
    bool flagged_multilane = false;  // unsplit multi-boundary sweep
};

// Per-vehicle scan of the smoothed lateral-velocity signal; only completed
// changes that cross a lane boundary are returned, ordered by
// (recording_id, vehicle_id, start_frame). The default runs vehicles in
// parallel; _serial is the reference implementation.
std::vector<LaneChangeEvent> detect_lane_changes(const Recording& rec,
                                                 const ExtractionParams& params);
std::vector<LaneChangeEvent> detect_lane_changes_serial(const Recording& rec,
                                                        const ExtractionParams& params);

enum class SummaryVariable { Duration, Speed, TimeHeadway, DistanceHeadway };

SummaryVariable summary_variable_from_name(const std::string& name);
std::string summary_variable_name(SummaryVariable v);

struct DescriptiveStats {
    std::size_t count = 0;
    double mean = 0.0;
    double std_dev = 0.0;  // sample, n-1
    double minimum = 0.0;
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
    double maximum = 0.0;
    std::size_t excluded = 0;  // rows lacking the optional covariate
};

DescriptiveStats summarize(const std::vector<LaneChangeEvent>& events, SummaryVariable variable,
                           std::optional<VehicleClass> class_filter = std::nullopt);

void export_events(const std::vector<LaneChangeEvent>& events, const std::string& path);
std::vector<LaneChangeEvent> import_events(const std::string& path);

// centered moving average over a window given in seconds
std::vector<double> smooth_signal(const std::vector<double>& values, double window_seconds,
                                  double frame_rate);

}  // namespace lcd
