#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "lcd/extraction.hpp"
#include "lcd/survival.hpp"
#include "lcd/trajectory.hpp"

namespace lcd {

// Generator laws for one vehicle class.
struct ClassSpec {
    std::size_t n_vehicles = 0;
    std::size_t n_lane_changes = 0;  // first n vehicles get one LC each
    DistributionParams duration_law;
    DistributionParams speed_law;
    DistributionParams thw_law;
    DistributionParams dhw_law;
    double headway_presence = 0.9;  // fraction of vehicles with a preceding vehicle
    // log-linear duration effects: duration *= exp(beta * (x - law median))
    std::map<std::string, double> covariate_effects;  // keys: speed, thw, dhw
};

struct SyntheticSpec {
    long long recording_id = 1;
    long long location_id = 1;
    double frame_rate = 25.0;
    double lane_width = 3.75;
    int n_lanes = 4;
    double lateral_velocity_noise = 0.015;  // m/s, white noise on the signal
    double margin_seconds = 4.0;           // straight driving before/after the LC
    ClassSpec cars;
    ClassSpec trucks;

    // calibrated so car durations center near 5.5 s and trucks near 6.1 s
    static SyntheticSpec defaults();
    void validate() const;
};

struct SyntheticResult {
    Recording recording;
    std::vector<LaneChangeEvent> ground_truth;  // planted start/end frames
};

SyntheticResult generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace lcd
