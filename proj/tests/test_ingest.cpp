#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lcd/errors.hpp"
#include "lcd/trajectory.hpp"

using namespace lcd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("lcd_ingest_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        fs::path p = path / name;
        std::ofstream out(p);
        out << content;
        return p.string();
    }
};

const char* kRecMeta =
    "recording_id,frame_rate,location_id,lane_boundaries,lane_boundaries_2\n"
    "7,25,2,0;3.75;7.5,\n";

const char* kVehicles =
    "vehicle_id,vehicle_class,length,width,driving_direction\n"
    "1,Car,4.5,1.9,1\n"
    "2,Truck,12.5,2.5,1\n"
    "3,Car,4.2,1.8,1\n";

std::string tracks_header() {
    return "frame,vehicle_id,longitudinal_position,lateral_position,"
           "longitudinal_velocity,lateral_velocity,longitudinal_acceleration,"
           "lateral_acceleration,lane_id,preceding_vehicle_id,time_headway,"
           "distance_headway\n";
}

std::string three_vehicle_tracks() {
    std::string s = tracks_header();
    // vehicle 1: ordered frames, full headway info on frame 2
    s += "1,1,10.0,1.8,30.0,0.0,0.0,0.0,1,,,\n";
    s += "2,1,11.2,1.8,30.0,0.0,0.0,0.0,1,2,1.5,45.0\n";
    s += "3,1,12.4,1.8,30.0,0.0,0.0,0.0,1,2,0,45.0\n";  // thw sentinel 0
    // vehicle 2: rows intentionally out of order
    s += "6,2,22.0,5.6,25.0,0.1,0.0,0.0,2,,,\n";
    s += "5,2,21.0,5.5,25.0,0.1,0.0,0.0,2,,,\n";
    // vehicle 3: single frame
    s += "9,3,30.0,1.9,28.0,0.0,0.0,0.0,1,,,\n";
    return s;
}

}  // namespace

TEST_CASE("well-formed three-vehicle recording loads") {
    TempDir dir;
    std::string tp = dir.file("tracks.csv", three_vehicle_tracks());
    std::string vp = dir.file("veh.csv", kVehicles);
    std::string rp = dir.file("rec.csv", kRecMeta);
    Recording rec = load_recording(tp, vp, rp, canonical_column_map());

    CHECK(rec.meta.recording_id == 7);
    CHECK(rec.meta.frame_rate == 25.0);
    CHECK(rec.meta.location_id == 2);
    REQUIRE(rec.meta.lane_boundaries.size() == 1);
    CHECK(rec.meta.lane_boundaries[0] == std::vector<double>{0.0, 3.75, 7.5});

    REQUIRE(rec.trajectories.size() == 3);
    REQUIRE(rec.vehicles.size() == 3);
    CHECK(rec.vehicles.at(2).vehicle_class == VehicleClass::HeavyVehicle);
    CHECK(rec.vehicles.at(1).driving_direction == 0);  // 1-based in the file

    // vehicle 2 got sorted by frame
    const auto& t2 = rec.trajectories.at(2);
    REQUIRE(t2.size() == 2);
    CHECK(t2[0].frame == 5);
    CHECK(t2[1].frame == 6);

    // headway normalization
    const auto& t1 = rec.trajectories.at(1);
    CHECK_FALSE(t1[0].preceding_vehicle_id.has_value());
    CHECK_FALSE(t1[0].time_headway.has_value());
    REQUIRE(t1[1].preceding_vehicle_id.has_value());
    CHECK(*t1[1].preceding_vehicle_id == 2);
    CHECK(*t1[1].time_headway == 1.5);
    CHECK(*t1[1].distance_headway == 45.0);
    CHECK_FALSE(t1[2].time_headway.has_value());  // 0 is the "absent" sentinel
    CHECK(t1[2].distance_headway.has_value());
}

TEST_CASE("missing mapped column is reported") {
    TempDir dir;
    std::string bad = three_vehicle_tracks();
    // drop the lateral_velocity column from header and rows
    std::string tp = dir.file(
        "tracks.csv",
        "frame,vehicle_id,longitudinal_position,lateral_position,lane_id\n"
        "1,1,10.0,1.8,1\n");
    std::string vp = dir.file("veh.csv", kVehicles);
    std::string rp = dir.file("rec.csv", kRecMeta);
    CHECK_THROWS_AS(load_recording(tp, vp, rp, canonical_column_map()), MissingColumn);
}

TEST_CASE("velocities fall back to central differences of positions") {
    TempDir dir;
    std::vector<double> xs = {10.0, 11.5, 13.4, 15.0, 16.1};
    std::vector<double> ys = {1.8, 1.9, 2.2, 2.6, 2.7};
    std::string s = "frame,vehicle_id,longitudinal_position,lateral_position,lane_id\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        s += std::to_string(i + 1) + ",1," + std::to_string(xs[i]) + "," +
             std::to_string(ys[i]) + ",1\n";
    }
    std::string tp = dir.file("tracks.csv", s);
    std::string vp = dir.file("veh.csv",
                              "vehicle_id,vehicle_class,length,width,driving_direction\n"
                              "1,Car,4.5,1.9,1\n");
    std::string rp = dir.file("rec.csv", kRecMeta);

    ColumnMap cm = canonical_column_map();
    cm.tracks.erase("longitudinal_velocity");
    cm.tracks.erase("lateral_velocity");
    cm.tracks.erase("longitudinal_acceleration");
    cm.tracks.erase("lateral_acceleration");
    cm.tracks.erase("preceding_vehicle_id");
    cm.tracks.erase("time_headway");
    cm.tracks.erase("distance_headway");
    Recording rec = load_recording(tp, vp, rp, cm);

    const double fr = 25.0;
    const auto& traj = rec.trajectories.at(1);
    REQUIRE(traj.size() == xs.size());
    // independent finite-difference oracle
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double vx, vy;
        if (i == 0) {
            vx = (xs[1] - xs[0]) * fr;
            vy = (ys[1] - ys[0]) * fr;
        } else if (i + 1 == xs.size()) {
            vx = (xs[i] - xs[i - 1]) * fr;
            vy = (ys[i] - ys[i - 1]) * fr;
        } else {
            vx = (xs[i + 1] - xs[i - 1]) * 0.5 * fr;
            vy = (ys[i + 1] - ys[i - 1]) * 0.5 * fr;
        }
        CHECK(traj[i].longitudinal_velocity == doctest::Approx(vx).epsilon(1e-9));
        CHECK(traj[i].lateral_velocity == doctest::Approx(vy).epsilon(1e-9));
    }
    // accelerations are central differences of the derived velocities
    double a1 = (traj[2].longitudinal_velocity - traj[0].longitudinal_velocity) * 0.5 * fr;
    CHECK(traj[1].longitudinal_acceleration == doctest::Approx(a1).epsilon(1e-9));
}

TEST_CASE("save/load round trip is structurally identical") {
    TempDir dir;
    std::string tp = dir.file("tracks.csv", three_vehicle_tracks());
    std::string vp = dir.file("veh.csv", kVehicles);
    std::string rp = dir.file("rec.csv", kRecMeta);
    Recording rec = load_recording(tp, vp, rp, canonical_column_map());

    std::string tp2 = (dir.path / "t2.csv").string();
    std::string vp2 = (dir.path / "v2.csv").string();
    std::string rp2 = (dir.path / "r2.csv").string();
    save_recording(rec, tp2, vp2, rp2);
    Recording again = load_recording(tp2, vp2, rp2, canonical_column_map());

    CHECK(again.meta.recording_id == rec.meta.recording_id);
    CHECK(again.meta.frame_rate == rec.meta.frame_rate);
    CHECK(again.meta.lane_boundaries == rec.meta.lane_boundaries);
    REQUIRE(again.vehicles.size() == rec.vehicles.size());
    for (const auto& [vid, vm] : rec.vehicles) {
        const auto& wm = again.vehicles.at(vid);
        CHECK(wm.vehicle_class == vm.vehicle_class);
        CHECK(wm.length == vm.length);
        CHECK(wm.driving_direction == vm.driving_direction);
    }
    REQUIRE(again.trajectories.size() == rec.trajectories.size());
    for (const auto& [vid, traj] : rec.trajectories) {
        const auto& back = again.trajectories.at(vid);
        REQUIRE(back.size() == traj.size());
        for (std::size_t i = 0; i < traj.size(); ++i) {
            CHECK(back[i].frame == traj[i].frame);
            CHECK(back[i].lateral_position == doctest::Approx(traj[i].lateral_position));
            CHECK(back[i].lateral_velocity == doctest::Approx(traj[i].lateral_velocity));
            CHECK(back[i].lane_id == traj[i].lane_id);
            CHECK(back[i].preceding_vehicle_id == traj[i].preceding_vehicle_id);
            CHECK(back[i].time_headway.has_value() == traj[i].time_headway.has_value());
        }
    }
}

TEST_CASE("row order does not matter") {
    TempDir dir;
    std::string ordered = three_vehicle_tracks();
    // reverse the data rows
    std::vector<std::string> lines;
    std::stringstream ss(ordered);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    std::string shuffled = lines[0] + "\n";
    for (std::size_t i = lines.size(); i > 1; --i) shuffled += lines[i - 1] + "\n";

    std::string vp = dir.file("veh.csv", kVehicles);
    std::string rp = dir.file("rec.csv", kRecMeta);
    Recording a = load_recording(dir.file("a.csv", ordered), vp, rp, canonical_column_map());
    Recording b = load_recording(dir.file("b.csv", shuffled), vp, rp, canonical_column_map());
    REQUIRE(a.trajectories.size() == b.trajectories.size());
    for (const auto& [vid, traj] : a.trajectories) {
        const auto& other = b.trajectories.at(vid);
        REQUIRE(other.size() == traj.size());
        for (std::size_t i = 0; i < traj.size(); ++i) {
            CHECK(other[i].frame == traj[i].frame);
            CHECK(other[i].longitudinal_position == traj[i].longitudinal_position);
        }
    }
}

TEST_CASE("malformed input errors") {
    TempDir dir;
    std::string vp = dir.file("veh.csv", kVehicles);
    std::string rp = dir.file("rec.csv", kRecMeta);

    std::string bad_num = tracks_header() + "1,1,oops,1.8,30.0,0.0,0.0,0.0,1,,,\n";
    CHECK_THROWS_AS(
        load_recording(dir.file("m.csv", bad_num), vp, rp, canonical_column_map()),
        MalformedRow);

    std::string dup = tracks_header() +
                      "1,1,10.0,1.8,30.0,0.0,0.0,0.0,1,,,\n"
                      "1,1,10.5,1.8,30.0,0.0,0.0,0.0,1,,,\n";
    CHECK_THROWS_AS(load_recording(dir.file("d.csv", dup), vp, rp, canonical_column_map()),
                    InconsistentFrames);

    std::string empty = tracks_header();
    CHECK_THROWS_AS(
        load_recording(dir.file("e.csv", empty), vp, rp, canonical_column_map()),
        EmptyRecording);

    std::string orphan = tracks_header() + "1,99,10.0,1.8,30.0,0.0,0.0,0.0,1,,,\n";
    CHECK_THROWS_AS(
        load_recording(dir.file("o.csv", orphan), vp, rp, canonical_column_map()),
        DataError);
}

TEST_CASE("highd column names and scaling") {
    TempDir dir;
    // HighD tracksMeta calls length/width "width"/"height"
    std::string vp = dir.file("veh.csv",
                              "id,class,width,height,drivingDirection\n"
                              "1,Car,4.5,1.9,2\n");
    std::string rp = dir.file("rec.csv",
                              "id,frameRate,locationId,upperLaneMarkings,lowerLaneMarkings\n"
                              "3,25,1,0;3.75,8.0;11.75\n");
    std::string tp = dir.file("tracks.csv",
                              "frame,id,x,y,xVelocity,yVelocity,xAcceleration,"
                              "yAcceleration,laneId,precedingId,thw,dhw\n"
                              "1,1,10.0,1.8,30.0,0.0,0.0,0.0,1,0,0,0\n");
    Recording rec = load_recording(tp, vp, rp, ColumnMap::highd_default());
    CHECK(rec.vehicles.at(1).length == 4.5);
    CHECK(rec.vehicles.at(1).width == 1.9);
    CHECK(rec.vehicles.at(1).driving_direction == 1);
    REQUIRE(rec.meta.lane_boundaries.size() == 2);
    CHECK(rec.meta.lane_boundaries[1] == std::vector<double>{8.0, 11.75});
    // precedingId 0 means "no preceding vehicle"
    CHECK_FALSE(rec.trajectories.at(1)[0].preceding_vehicle_id.has_value());

    // custom map with a km/h -> m/s conversion
    std::string cm_path = dir.file("map.json", R"({
      "tracks": {
        "frame": "frame", "vehicle_id": "id",
        "longitudinal_position": "x", "lateral_position": "y",
        "longitudinal_velocity": {"column": "xVelocity", "scale": 0.2777777778},
        "lateral_velocity": "yVelocity", "lane_id": "laneId"
      }
    })");
    ColumnMap cm = ColumnMap::from_json_file(cm_path);
    CHECK(cm.tracks.at("longitudinal_velocity").scale ==
          doctest::Approx(1.0 / 3.6).epsilon(1e-6));
    cm.vehicle_meta = ColumnMap::highd_default().vehicle_meta;
    cm.recording_meta = ColumnMap::highd_default().recording_meta;
    Recording scaled = load_recording(tp, vp, rp, cm);
    CHECK(scaled.trajectories.at(1)[0].longitudinal_velocity ==
          doctest::Approx(30.0 / 3.6).epsilon(1e-6));
}

TEST_CASE("validation findings") {
    TempDir dir;
    std::string tp = dir.file("tracks.csv", three_vehicle_tracks());
    std::string vp = dir.file("veh.csv", kVehicles);
    std::string rp = dir.file("rec.csv", kRecMeta);
    Recording rec = load_recording(tp, vp, rp, canonical_column_map());
    CHECK(validate_recording(rec).empty());

    Recording gap = rec;
    gap.trajectories.at(1)[2].frame = 5;  // 1,2,5
    auto findings = validate_recording(gap);
    REQUIRE(findings.size() == 1);
    CHECK(findings[0].kind == FindingKind::FrameGap);
    CHECK(findings[0].vehicle_id == 1);
    CHECK(findings[0].frame == 5);

    Recording orphan = rec;
    orphan.trajectories.at(3)[0].time_headway = 2.0;  // no preceding id
    findings = validate_recording(orphan);
    REQUIRE(findings.size() == 1);
    CHECK(findings[0].kind == FindingKind::OrphanHeadway);

    Recording outside = rec;
    outside.trajectories.at(3)[0].lateral_position = 12.0;  // beyond 7.5
    findings = validate_recording(outside);
    REQUIRE(findings.size() == 1);
    CHECK(findings[0].kind == FindingKind::OutOfLaneBounds);
}

TEST_CASE("lane boundaries from meta or estimated") {
    TempDir dir;
    std::string tp = dir.file("tracks.csv", three_vehicle_tracks());
    std::string vp = dir.file("veh.csv", kVehicles);
    std::string rp = dir.file("rec.csv", kRecMeta);
    Recording rec = load_recording(tp, vp, rp, canonical_column_map());
    CHECK(lane_boundaries_for(rec, 0) == std::vector<double>{0.0, 3.75, 7.5});

    // drop the meta and estimate: lanes at y ~ 1.8/1.9 and y ~ 5.5/5.6
    Recording est = rec;
    est.meta.lane_boundaries.clear();
    auto bounds = lane_boundaries_for(est, 0);
    REQUIRE(bounds.size() == 1);
    CHECK(bounds[0] > 1.9);
    CHECK(bounds[0] < 5.5);

    // single observed lane cannot be split
    Recording single = est;
    single.trajectories.erase(2);
    CHECK_THROWS_AS(lane_boundaries_for(single, 0), NoLaneBoundaries);
}

TEST_CASE("vehicle class names") {
    CHECK(vehicle_class_from_name("Car") == VehicleClass::PassengerCar);
    CHECK(vehicle_class_from_name("truck") == VehicleClass::HeavyVehicle);
    CHECK(vehicle_class_name(VehicleClass::HeavyVehicle) == "Truck");
    CHECK_THROWS_AS(vehicle_class_from_name("bike"), DataError);
}
