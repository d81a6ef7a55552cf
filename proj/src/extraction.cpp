#include "lcd/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lcd/csv.hpp"
#include "lcd/errors.hpp"

namespace lcd {

void ExtractionParams::validate() const {
    if (!(lateral_speed_threshold > 0.0)) throw ConfigError("lateral_speed_threshold must be > 0");
    if (!(hysteresis_fraction > 0.0 && hysteresis_fraction <= 1.0)) {
        throw ConfigError("hysteresis_fraction must be in (0,1]");
    }
    if (smoothing_window < 0.0) throw ConfigError("smoothing_window must be >= 0");
    if (!(min_duration < max_duration)) throw ConfigError("min_duration must be < max_duration");
}

std::string lc_direction_name(LcDirection d) {
    return d == LcDirection::Left ? "Left" : "Right";
}

LcDirection lc_direction_from_name(const std::string& name) {
    if (name == "Left") return LcDirection::Left;
    if (name == "Right") return LcDirection::Right;
    throw DataError("unknown direction: " + name);
}

std::vector<double> smooth_signal(const std::vector<double>& values, double window_seconds,
                                  double frame_rate) {
    const long long n = static_cast<long long>(values.size());
    long long half = static_cast<long long>(std::lround(0.5 * window_seconds * frame_rate));
    if (half <= 0 || n == 0) return values;
    std::vector<double> out(values.size());
    // prefix sums keep this O(n)
    std::vector<double> prefix(values.size() + 1, 0.0);
    for (long long i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + values[i];
    for (long long i = 0; i < n; ++i) {
        long long lo = std::max<long long>(0, i - half);
        long long hi = std::min<long long>(n - 1, i + half);
        out[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    }
    return out;
}

namespace {

struct CandidateInterval {
    std::size_t start = 0;
    std::size_t end = 0;  // inclusive
    int sign = 0;
};

// Whether the lateral position crosses any boundary strictly inside
// [start, end] of the trajectory.
int boundaries_crossed(const std::vector<TrackFrame>& traj, std::size_t start, std::size_t end,
                       const std::vector<double>& boundaries) {
    double y0 = traj[start].lateral_position;
    double y1 = traj[end].lateral_position;
    double lo = std::min(y0, y1), hi = std::max(y0, y1);
    int crossed = 0;
    for (double b : boundaries) {
        if (b > lo && b < hi) ++crossed;
    }
    return crossed;
}

// The smoothed signal crosses zero roughly half a window beyond the true
// maneuver edge (and later still when noise runs positive), so the raw
// zero-crossing frame is biased outward. The edge between the hysteresis and
// main thresholds is far above the noise floor; extrapolating that slope
// down to zero lands on the true edge of any smooth ramp to sub-frame
// accuracy.
std::size_t refine_edge(const std::vector<double>& v, std::size_t lo, std::size_t hi, int sign,
                        bool start_side, std::size_t fallback) {
    double peak = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) peak = std::max(peak, sign * v[k]);
    const double lo_ref = 0.15 * peak, hi_ref = 0.45 * peak;

    long long a = -1;  // first frame past hi_ref, walking inward from the edge
    if (start_side) {
        for (std::size_t k = lo; k <= hi; ++k) {
            if (sign * v[k] >= hi_ref) {
                a = static_cast<long long>(k);
                break;
            }
        }
    } else {
        for (std::size_t k = hi + 1; k-- > lo;) {
            if (sign * v[k] >= hi_ref) {
                a = static_cast<long long>(k);
                break;
            }
        }
    }
    if (a < 0) return fallback;
    long long b = a;  // extend outward while still above lo_ref
    if (start_side) {
        while (b > static_cast<long long>(lo) && sign * v[b - 1] >= lo_ref) --b;
    } else {
        while (b + 1 <= static_cast<long long>(hi) && sign * v[b + 1] >= lo_ref) ++b;
    }
    if (a == b) return fallback;

    // least squares over the edge run, extrapolated to the zero of the line
    double n = 0.0, sk = 0.0, sv = 0.0, skk = 0.0, skv = 0.0;
    for (long long k = std::min(a, b); k <= std::max(a, b); ++k) {
        double kk = static_cast<double>(k), vv = sign * v[k];
        n += 1.0;
        sk += kk;
        sv += vv;
        skk += kk * kk;
        skv += kk * vv;
    }
    double denom = n * skk - sk * sk;
    if (denom == 0.0) return fallback;
    double slope = (n * skv - sk * sv) / denom;
    double intercept = (sv - slope * sk) / n;
    if (!std::isfinite(slope) || (start_side ? slope <= 0.0 : slope >= 0.0)) return fallback;
    long long idx = std::llround(-intercept / slope);
    idx = std::clamp(idx, static_cast<long long>(lo), static_cast<long long>(hi));
    return static_cast<std::size_t>(idx);
}

void finalize_event(const Recording& rec, const VehicleMeta& vm,
                    const std::vector<TrackFrame>& traj, std::size_t start, std::size_t end,
                    bool flagged, std::vector<LaneChangeEvent>& out) {
    LaneChangeEvent ev;
    ev.recording_id = rec.meta.recording_id;
    ev.vehicle_id = vm.vehicle_id;
    ev.vehicle_class = vm.vehicle_class;
    ev.start_frame = traj[start].frame;
    ev.end_frame = traj[end].frame;
    ev.duration = static_cast<double>(ev.end_frame - ev.start_frame) / rec.meta.frame_rate;
    ev.speed_at_start = std::fabs(traj[start].longitudinal_velocity);
    ev.time_headway_at_start = traj[start].time_headway;
    ev.distance_headway_at_start = traj[start].distance_headway;
    ev.origin_lane = traj[start].lane_id;
    ev.target_lane = traj[end].lane_id;
    ev.flagged_multilane = flagged;
    double dy = traj[end].lateral_position - traj[start].lateral_position;
    // convention: increasing lateral position is a right change for
    // direction 0 and a left change for the opposite direction
    bool to_right = vm.driving_direction == 0 ? dy > 0.0 : dy < 0.0;
    ev.direction = to_right ? LcDirection::Right : LcDirection::Left;
    out.push_back(ev);
}

std::vector<LaneChangeEvent> detect_for_vehicle(const Recording& rec, const VehicleMeta& vm,
                                                const std::vector<TrackFrame>& traj,
                                                const ExtractionParams& params,
                                                const std::vector<double>& boundaries) {
    std::vector<LaneChangeEvent> out;
    const std::size_t n = traj.size();
    if (n < 3) return out;
    const double fps = rec.meta.frame_rate;

    std::vector<double> vlat(n);
    for (std::size_t i = 0; i < n; ++i) vlat[i] = traj[i].lateral_velocity;
    std::vector<double> v = smooth_signal(vlat, params.smoothing_window, fps);

    const double thr = params.lateral_speed_threshold;
    const double hyst = params.hysteresis_fraction * thr;

    std::size_t i = 0;
    while (i < n) {
        if (std::fabs(v[i]) <= thr) {
            ++i;
            continue;
        }
        CandidateInterval cand;
        cand.sign = v[i] > 0.0 ? 1 : -1;
        cand.start = i;
        std::size_t j = i;
        while (j + 1 < n && cand.sign * v[j + 1] > hyst) ++j;
        cand.end = j;

        // extend outward to the nearest zero crossings of the smoothed
        // signal, capturing the full lateral excursion
        std::size_t start = cand.start;
        while (start > 0 && cand.sign * v[start - 1] > 0.0) --start;
        std::size_t end = cand.end;
        while (end + 1 < n && cand.sign * v[end + 1] > 0.0) ++end;

        std::size_t rs = refine_edge(v, start, end, cand.sign, true, start);
        std::size_t re = refine_edge(v, start, end, cand.sign, false, end);
        if (rs >= re) {
            rs = start;
            re = end;
        }
        double duration = static_cast<double>(traj[re].frame - traj[rs].frame) / fps;
        bool lane_ok = !params.require_lane_id_change ||
                       traj[rs].lane_id != traj[re].lane_id;
        int crossed = boundaries_crossed(traj, start, end, boundaries);
        bool keep = lane_ok && boundaries_crossed(traj, rs, re, boundaries) >= 1 &&
                    duration >= params.min_duration && duration <= params.max_duration;
        if (keep && crossed >= 2) {
            // multi-lane sweep: split at an interior zero of the smoothed
            // lateral acceleration if one exists
            std::vector<double> alat(end - start + 1);
            for (std::size_t k = start; k <= end; ++k) {
                alat[k - start] = traj[k].lateral_acceleration;
            }
            std::vector<double> a = smooth_signal(alat, params.smoothing_window, fps);
            std::size_t split = 0;
            for (std::size_t k = 1; k + 1 < a.size(); ++k) {
                if (a[k] * a[k + 1] <= 0.0 && a[k] != 0.0) {
                    split = start + k;
                    break;
                }
            }
            bool split_ok = false;
            if (split > start && split < end) {
                double d1 = static_cast<double>(traj[split].frame - traj[start].frame) / fps;
                double d2 = static_cast<double>(traj[end].frame - traj[split].frame) / fps;
                bool c1 = boundaries_crossed(traj, start, split, boundaries) >= 1;
                bool c2 = boundaries_crossed(traj, split, end, boundaries) >= 1;
                bool l1 = !params.require_lane_id_change ||
                          traj[start].lane_id != traj[split].lane_id;
                bool l2 = !params.require_lane_id_change ||
                          traj[split].lane_id != traj[end].lane_id;
                if (c1 && c2 && l1 && l2 && d1 >= params.min_duration &&
                    d1 <= params.max_duration && d2 >= params.min_duration &&
                    d2 <= params.max_duration) {
                    finalize_event(rec, vm, traj, start, split, false, out);
                    finalize_event(rec, vm, traj, split, end, false, out);
                    split_ok = true;
                }
            }
            if (!split_ok) finalize_event(rec, vm, traj, rs, re, true, out);
        } else if (keep) {
            finalize_event(rec, vm, traj, rs, re, false, out);
        }
        i = end + 1;
    }
    return out;
}

std::vector<LaneChangeEvent> detect_impl(const Recording& rec, const ExtractionParams& params,
                                         bool parallel) {
    params.validate();
    std::vector<long long> ids;
    ids.reserve(rec.trajectories.size());
    for (const auto& [vid, traj] : rec.trajectories) ids.push_back(vid);

    // boundaries resolved once per driving direction
    std::vector<std::vector<double>> bounds_by_dir;
    for (const auto& [vid, vm] : rec.vehicles) {
        int d = vm.driving_direction;
        while (static_cast<int>(bounds_by_dir.size()) <= d) bounds_by_dir.emplace_back();
        if (bounds_by_dir[d].empty()) bounds_by_dir[d] = lane_boundaries_for(rec, d);
    }

    std::vector<std::vector<LaneChangeEvent>> per_vehicle(ids.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long long k = 0; k < static_cast<long long>(ids.size()); ++k) {
        long long vid = ids[static_cast<std::size_t>(k)];
        const VehicleMeta& vm = rec.vehicles.at(vid);
        per_vehicle[static_cast<std::size_t>(k)] =
            detect_for_vehicle(rec, vm, rec.trajectories.at(vid), params,
                               bounds_by_dir[vm.driving_direction]);
    }
    std::vector<LaneChangeEvent> out;
    for (auto& evs : per_vehicle) {
        out.insert(out.end(), evs.begin(), evs.end());
    }
    // ids iterate in sorted map order, events per vehicle in frame order;
    // a final sort makes the contract explicit
    std::stable_sort(out.begin(), out.end(),
                     [](const LaneChangeEvent& a, const LaneChangeEvent& b) {
                         if (a.recording_id != b.recording_id) return a.recording_id < b.recording_id;
                         if (a.vehicle_id != b.vehicle_id) return a.vehicle_id < b.vehicle_id;
                         return a.start_frame < b.start_frame;
                     });
    return out;
}

}  // namespace

std::vector<LaneChangeEvent> detect_lane_changes(const Recording& rec,
                                                 const ExtractionParams& params) {
    return detect_impl(rec, params, true);
}

std::vector<LaneChangeEvent> detect_lane_changes_serial(const Recording& rec,
                                                        const ExtractionParams& params) {
    return detect_impl(rec, params, false);
}

SummaryVariable summary_variable_from_name(const std::string& name) {
    if (name == "duration") return SummaryVariable::Duration;
    if (name == "speed") return SummaryVariable::Speed;
    if (name == "thw") return SummaryVariable::TimeHeadway;
    if (name == "dhw") return SummaryVariable::DistanceHeadway;
    throw ConfigError("unknown summary variable: " + name);
}

std::string summary_variable_name(SummaryVariable v) {
    switch (v) {
        case SummaryVariable::Duration: return "duration";
        case SummaryVariable::Speed: return "speed";
        case SummaryVariable::TimeHeadway: return "thw";
        case SummaryVariable::DistanceHeadway: return "dhw";
    }
    return "unknown";
}

namespace {
double interpolated_percentile(const std::vector<double>& sorted, double q) {
    double h = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}
}  // namespace

DescriptiveStats summarize(const std::vector<LaneChangeEvent>& events, SummaryVariable variable,
                           std::optional<VehicleClass> class_filter) {
    std::vector<double> values;
    std::size_t excluded = 0;
    for (const auto& ev : events) {
        if (class_filter && ev.vehicle_class != *class_filter) continue;
        switch (variable) {
            case SummaryVariable::Duration:
                values.push_back(ev.duration);
                break;
            case SummaryVariable::Speed:
                values.push_back(ev.speed_at_start);
                break;
            case SummaryVariable::TimeHeadway:
                if (ev.time_headway_at_start) {
                    values.push_back(*ev.time_headway_at_start);
                } else {
                    ++excluded;
                }
                break;
            case SummaryVariable::DistanceHeadway:
                if (ev.distance_headway_at_start) {
                    values.push_back(*ev.distance_headway_at_start);
                } else {
                    ++excluded;
                }
                break;
        }
    }
    if (values.empty()) throw EmptySelection("summarize: no rows after filtering");

    DescriptiveStats s;
    s.count = values.size();
    s.excluded = excluded;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
    if (s.count > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std_dev = std::sqrt(ss / static_cast<double>(s.count - 1));
    }
    std::sort(values.begin(), values.end());
    s.minimum = values.front();
    s.maximum = values.back();
    s.p25 = interpolated_percentile(values, 0.25);
    s.p50 = interpolated_percentile(values, 0.50);
    s.p75 = interpolated_percentile(values, 0.75);
    return s;
}

namespace {
const std::vector<std::string> kEventHeader = {
    "recording_id", "vehicle_id", "vehicle_class", "direction", "start_frame", "end_frame",
    "duration",     "speed",      "thw",           "dhw",       "origin_lane", "target_lane"};

std::string num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}
}  // namespace

void export_events(const std::vector<LaneChangeEvent>& events, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(events.size());
    for (const auto& ev : events) {
        rows.push_back({std::to_string(ev.recording_id), std::to_string(ev.vehicle_id),
                        vehicle_class_name(ev.vehicle_class), lc_direction_name(ev.direction),
                        std::to_string(ev.start_frame), std::to_string(ev.end_frame),
                        num(ev.duration), num(ev.speed_at_start),
                        ev.time_headway_at_start ? num(*ev.time_headway_at_start) : "",
                        ev.distance_headway_at_start ? num(*ev.distance_headway_at_start) : "",
                        std::to_string(ev.origin_lane), std::to_string(ev.target_lane)});
    }
    write_csv(path, kEventHeader, rows);
}

std::vector<LaneChangeEvent> import_events(const std::string& path) {
    CsvTable table = read_csv(path);
    std::vector<std::size_t> cols;
    for (const auto& name : kEventHeader) {
        auto idx = table.column(name);
        if (!idx) throw SchemaMismatch("events file missing column '" + name + "'");
        cols.push_back(*idx);
    }
    std::vector<LaneChangeEvent> events;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() < table.header.size()) {
            throw SchemaMismatch("events row " + std::to_string(r) + " too short");
        }
        LaneChangeEvent ev;
        try {
            ev.recording_id = std::stoll(row[cols[0]]);
            ev.vehicle_id = std::stoll(row[cols[1]]);
            ev.vehicle_class = vehicle_class_from_name(row[cols[2]]);
            ev.direction = lc_direction_from_name(row[cols[3]]);
            ev.start_frame = std::stoll(row[cols[4]]);
            ev.end_frame = std::stoll(row[cols[5]]);
            ev.duration = std::stod(row[cols[6]]);
            ev.speed_at_start = std::stod(row[cols[7]]);
            if (!row[cols[8]].empty()) ev.time_headway_at_start = std::stod(row[cols[8]]);
            if (!row[cols[9]].empty()) ev.distance_headway_at_start = std::stod(row[cols[9]]);
            ev.origin_lane = std::stoll(row[cols[10]]);
            ev.target_lane = std::stoll(row[cols[11]]);
        } catch (const DataError&) {
            throw;
        } catch (const std::exception& e) {
            throw SchemaMismatch("events row " + std::to_string(r) + ": " + e.what());
        }
        events.push_back(ev);
    }
    return events;
}

}  // namespace lcd
