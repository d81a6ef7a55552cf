#include "lcd/synth.hpp"

#include <algorithm>
#include <cmath>

#include "lcd/errors.hpp"
#include "lcd/rng.hpp"

namespace lcd {

namespace {

double draw(const DistributionParams& law, Rng& rng) {
    if (law.family == Family::GenGamma) {
        double g = rng.gamma(law.shape_k);
        return std::pow(g, 1.0 / law.shape_p) / law.rate;
    }
    return quantile(law, rng.uniform());
}

double effect_multiplier(const ClassSpec& cls, const std::string& name, double value) {
    auto it = cls.covariate_effects.find(name);
    if (it == cls.covariate_effects.end()) return 1.0;
    double center = quantile([&] {
        if (name == "speed") return cls.speed_law;
        if (name == "thw") return cls.thw_law;
        return cls.dhw_law;
    }(), 0.5);
    return std::exp(it->second * (value - center));
}

}  // namespace

SyntheticSpec SyntheticSpec::defaults() {
    SyntheticSpec s;
    s.cars.n_vehicles = 120;
    s.cars.n_lane_changes = 100;
    s.cars.duration_law = DistributionParams::loglogistic(9.0, 1.0 / 5.5);
    s.cars.speed_law = DistributionParams::lognormal(std::log(29.0), 0.15);
    s.cars.thw_law = DistributionParams::lognormal(std::log(1.2), 0.5);
    s.cars.dhw_law = DistributionParams::lognormal(std::log(35.0), 0.6);
    s.cars.headway_presence = 0.9;
    s.trucks.n_vehicles = 40;
    s.trucks.n_lane_changes = 30;
    s.trucks.duration_law = DistributionParams::loglogistic(10.0, 1.0 / 6.1);
    s.trucks.speed_law = DistributionParams::lognormal(std::log(25.0), 0.08);
    s.trucks.thw_law = DistributionParams::lognormal(std::log(1.9), 0.6);
    s.trucks.dhw_law = DistributionParams::lognormal(std::log(47.0), 0.7);
    s.trucks.headway_presence = 0.95;
    return s;
}

void SyntheticSpec::validate() const {
    if (!(frame_rate > 0.0)) throw ConfigError("frame_rate must be positive");
    if (!(lane_width > 0.0)) throw ConfigError("lane_width must be positive");
    if (n_lanes < 2) throw ConfigError("need at least two lanes");
    if (lateral_velocity_noise < 0.0) throw ConfigError("noise must be >= 0");
    for (const ClassSpec* cls : {&cars, &trucks}) {
        if (cls->n_lane_changes > cls->n_vehicles) {
            throw ConfigError("more planted lane changes than vehicles");
        }
        if (cls->n_vehicles > 0) {
            cls->duration_law.validate();
            cls->speed_law.validate();
            cls->thw_law.validate();
            cls->dhw_law.validate();
        }
    }
}

SyntheticResult generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    SyntheticResult result;
    Recording& rec = result.recording;
    rec.meta.recording_id = spec.recording_id;
    rec.meta.location_id = spec.location_id;
    rec.meta.frame_rate = spec.frame_rate;
    std::vector<double> bounds;
    for (int i = 0; i <= spec.n_lanes; ++i) bounds.push_back(i * spec.lane_width);
    rec.meta.lane_boundaries.push_back(bounds);

    const double fps = spec.frame_rate;
    long long next_id = 1;

    auto make_vehicles = [&](const ClassSpec& cls, VehicleClass vclass) {
        for (std::size_t v = 0; v < cls.n_vehicles; ++v) {
            VehicleMeta vm;
            vm.vehicle_id = next_id++;
            vm.vehicle_class = vclass;
            vm.length = vclass == VehicleClass::PassengerCar ? 4.5 : 12.0;
            vm.width = vclass == VehicleClass::PassengerCar ? 1.9 : 2.5;
            vm.driving_direction = 0;
            rec.vehicles[vm.vehicle_id] = vm;

            const bool planted = v < cls.n_lane_changes;
            const double speed = draw(cls.speed_law, rng);
            const bool has_headway = rng.uniform() < cls.headway_presence;
            const double thw = has_headway ? draw(cls.thw_law, rng) : 0.0;
            const double dhw = has_headway ? draw(cls.dhw_law, rng) : 0.0;

            int origin_lane = 1 + static_cast<int>(rng.uniform() * spec.n_lanes);
            origin_lane = std::min(origin_lane, spec.n_lanes);
            int dir;
            if (origin_lane == 1) {
                dir = 1;
            } else if (origin_lane == spec.n_lanes) {
                dir = -1;
            } else {
                dir = rng.uniform() < 0.5 ? 1 : -1;
            }

            double duration = 0.0;
            if (planted) {
                duration = draw(cls.duration_law, rng);
                duration *= effect_multiplier(cls, "speed", speed);
                if (has_headway) {
                    duration *= effect_multiplier(cls, "thw", thw);
                    duration *= effect_multiplier(cls, "dhw", dhw);
                }
                duration = std::clamp(duration, 1.5, 15.0);
            }

            const long long m0 = std::llround(spec.margin_seconds * fps);
            const long long dframes = planted ? std::llround(duration * fps) : 0;
            const long long total = 2 * m0 + dframes;
            const double dy = dir * spec.lane_width;
            const double y0 = (origin_lane - 0.5) * spec.lane_width;
            const double t0 = static_cast<double>(m0) / fps;
            const double d_actual = planted ? static_cast<double>(dframes) / fps : 1.0;

            std::vector<TrackFrame>& traj = rec.trajectories[vm.vehicle_id];
            traj.reserve(total + 1);
            for (long long f = 0; f <= total; ++f) {
                double t = static_cast<double>(f) / fps;
                TrackFrame tf;
                tf.frame = f;
                tf.vehicle_id = vm.vehicle_id;
                tf.longitudinal_position = 100.0 + speed * t;
                tf.longitudinal_velocity = speed;
                tf.longitudinal_acceleration = 0.0;
                double tau = planted ? (t - t0) / d_actual : -1.0;
                double v_true = 0.0, a_true = 0.0, y = y0;
                if (tau >= 0.0 && tau <= 1.0) {
                    v_true = dy * M_PI / (2.0 * d_actual) * std::sin(M_PI * tau);
                    a_true = dy * M_PI * M_PI / (2.0 * d_actual * d_actual) *
                             std::cos(M_PI * tau);
                    y = y0 + dy * 0.5 * (1.0 - std::cos(M_PI * tau));
                } else if (tau > 1.0) {
                    y = y0 + dy;
                }
                tf.lateral_position = y;
                tf.lateral_velocity = v_true + spec.lateral_velocity_noise * rng.normal();
                tf.lateral_acceleration =
                    a_true + 2.0 * spec.lateral_velocity_noise * rng.normal();
                int lane = static_cast<int>(std::floor(y / spec.lane_width)) + 1;
                tf.lane_id = std::clamp(lane, 1, spec.n_lanes);
                if (has_headway) {
                    tf.preceding_vehicle_id = vm.vehicle_id == 1 ? 2 : vm.vehicle_id - 1;
                    tf.time_headway = thw;
                    tf.distance_headway = dhw;
                }
                traj.push_back(tf);
            }

            if (planted) {
                LaneChangeEvent ev;
                ev.recording_id = rec.meta.recording_id;
                ev.vehicle_id = vm.vehicle_id;
                ev.vehicle_class = vclass;
                ev.direction = dir > 0 ? LcDirection::Right : LcDirection::Left;
                ev.start_frame = m0;
                ev.end_frame = m0 + dframes;
                ev.duration = static_cast<double>(dframes) / fps;
                ev.speed_at_start = speed;
                if (has_headway) {
                    ev.time_headway_at_start = thw;
                    ev.distance_headway_at_start = dhw;
                }
                ev.origin_lane = origin_lane;
                ev.target_lane = origin_lane + dir;
                result.ground_truth.push_back(ev);
            }
        }
    };

    make_vehicles(spec.cars, VehicleClass::PassengerCar);
    make_vehicles(spec.trucks, VehicleClass::HeavyVehicle);
    return result;
}

}  // namespace lcd
