// Compares the OpenMP kernels against their serial reference implementations:
// log-likelihood evaluation over large samples and per-vehicle lane-change
// detection. Verifies identical results while timing both paths.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include <omp.h>

#include "lcd/extraction.hpp"
#include "lcd/survival.hpp"
#include "lcd/synth.hpp"

using namespace lcd;
using clock_type = std::chrono::steady_clock;

namespace {

template <class F>
double time_ms(F&& f, int reps) {
    auto t0 = clock_type::now();
    for (int r = 0; r < reps; ++r) f();
    auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void bench_loglik(std::size_t n) {
    DistributionParams gg = DistributionParams::gen_gamma(1.8, 1.4, 0.25);
    Sample s = sample_durations(gg, n, 1234);

    double serial_val = 0.0, parallel_val = 0.0;
    double t_serial = time_ms([&] { serial_val = log_likelihood_serial(gg, s); }, 20);
    double t_parallel = time_ms([&] { parallel_val = log_likelihood(gg, s); }, 20);
    // block summation reorders the accumulation, so agreement is to rounding,
    // not bitwise; the parallel value itself is thread-count independent
    double rel = std::fabs(serial_val - parallel_val) / std::fabs(serial_val);
    std::printf("log_likelihood  n=%-9zu serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s (rel diff %.1e)\n",
                n, t_serial, t_parallel, t_serial / t_parallel,
                rel < 1e-12 ? "agree" : "MISMATCH", rel);
}

void bench_detection(std::size_t vehicles) {
    SyntheticSpec spec = SyntheticSpec::defaults();
    spec.cars.n_vehicles = spec.cars.n_lane_changes = vehicles * 3 / 4;
    spec.trucks.n_vehicles = spec.trucks.n_lane_changes = vehicles / 4;
    auto res = generate_synthetic(spec, 77);
    ExtractionParams params;

    std::vector<LaneChangeEvent> serial_ev, parallel_ev;
    double t_serial = time_ms([&] { serial_ev = detect_lane_changes_serial(res.recording, params); }, 3);
    double t_parallel = time_ms([&] { parallel_ev = detect_lane_changes(res.recording, params); }, 3);

    bool identical = serial_ev.size() == parallel_ev.size();
    for (std::size_t i = 0; identical && i < serial_ev.size(); ++i) {
        identical = serial_ev[i].vehicle_id == parallel_ev[i].vehicle_id &&
                    serial_ev[i].start_frame == parallel_ev[i].start_frame &&
                    serial_ev[i].end_frame == parallel_ev[i].end_frame &&
                    serial_ev[i].duration == parallel_ev[i].duration;
    }
    std::printf("detection       v=%-9zu serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s\n",
                vehicles, t_serial, t_parallel, t_serial / t_parallel,
                identical ? "identical events" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t scale = argc > 1 ? std::stoull(argv[1]) : 1;
    std::printf("threads: %d\n", omp_get_max_threads());
    for (std::size_t n : {100000, 1000000}) bench_loglik(n * scale);
    for (std::size_t v : {200, 1000}) bench_detection(v * scale);
    return 0;
}
