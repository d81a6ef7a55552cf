#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lcd/aft.hpp"
#include "lcd/errors.hpp"
#include "lcd/extraction.hpp"
#include "lcd/fitting.hpp"
#include "lcd/survival.hpp"
#include "lcd/synth.hpp"
#include "lcd/trajectory.hpp"

using json = nlohmann::json;
using namespace lcd;
namespace fs = std::filesystem;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::uint64_t seed = 1;
    std::string out = ".";
    bool split_by_class = true;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config parse failure in " + path + ": " + e.what());
    }
}

json section(const json& cfg, const std::string& name) {
    if (!cfg.contains(name)) return json::object();
    if (!cfg.at(name).is_object()) throw ConfigError("config section '" + name + "' must be an object");
    return cfg.at(name);
}

std::string require_string(const json& sec, const std::string& key, const std::string& where) {
    if (!sec.contains(key) || !sec.at(key).is_string()) {
        throw ConfigError(where + " requires a string '" + key + "' entry");
    }
    return sec.at(key).get<std::string>();
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw IoError("write failure: " + path.string());
}

fs::path ensure_out_dir(const GlobalArgs& g) {
    fs::path dir(g.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

DistributionParams law_from_json(const json& j) {
    if (!j.is_object() || !j.contains("family")) {
        throw ConfigError("a law needs an object with a 'family' field");
    }
    Family f;
    try {
        f = family_from_name(j.at("family").get<std::string>());
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    auto num = [&](const std::string& key) {
        if (!j.contains(key) || !j.at(key).is_number()) {
            throw ConfigError("law '" + family_name(f) + "' requires numeric '" + key + "'");
        }
        return j.at(key).get<double>();
    };
    switch (f) {
        case Family::Exponential: return DistributionParams::exponential(num("rate"));
        case Family::Weibull: return DistributionParams::weibull(num("p"), num("rate"));
        case Family::Lognormal: return DistributionParams::lognormal(num("mu"), num("sigma"));
        case Family::Loglogistic: return DistributionParams::loglogistic(num("p"), num("rate"));
        case Family::GenGamma:
            return DistributionParams::gen_gamma(num("k"), num("p"), num("rate"));
    }
    throw ConfigError("unreachable family");
}

ExtractionParams extraction_params_from_json(const json& sec) {
    ExtractionParams p;
    if (sec.contains("params")) {
        const json& j = sec.at("params");
        if (!j.is_object()) throw ConfigError("'params' must be an object");
        try {
            p.lateral_speed_threshold = j.value("lateral_speed_threshold", p.lateral_speed_threshold);
            p.hysteresis_fraction = j.value("hysteresis_fraction", p.hysteresis_fraction);
            p.smoothing_window = j.value("smoothing_window", p.smoothing_window);
            p.min_duration = j.value("min_duration", p.min_duration);
            p.max_duration = j.value("max_duration", p.max_duration);
            p.require_lane_id_change = j.value("require_lane_id_change", p.require_lane_id_change);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad extraction params: ") + e.what());
        }
    }
    p.validate();
    return p;
}

std::vector<double> grid_from_json(const json& sec) {
    double start = 0.0, stop = 16.0, step = 0.25;
    if (sec.contains("grid")) {
        const json& g = sec.at("grid");
        try {
            start = g.value("start", start);
            stop = g.value("stop", stop);
            step = g.value("step", step);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad grid: ") + e.what());
        }
    }
    if (!(step > 0.0) || !(stop >= start)) throw ConfigError("grid requires step > 0 and stop >= start");
    std::vector<double> t;
    for (double x = start; x <= stop + 1e-12; x += step) t.push_back(x);
    return t;
}

ColumnMap column_map_from_json(const json& sec) {
    std::string which = sec.is_object() ? sec.value("column_map", "canonical") : "canonical";
    if (which == "canonical") return canonical_column_map();
    if (which == "highd") return ColumnMap::highd_default();
    return ColumnMap::from_json_file(which);
}

struct ClassBlock {
    std::string label;
    std::optional<VehicleClass> filter;
};

std::vector<ClassBlock> class_blocks(bool split) {
    if (!split) return {{"all", std::nullopt}};
    return {{"cars", VehicleClass::PassengerCar}, {"trucks", VehicleClass::HeavyVehicle}};
}

Sample durations_sample(const std::vector<LaneChangeEvent>& events,
                        std::optional<VehicleClass> cls) {
    Sample s;
    for (const auto& ev : events) {
        if (cls && ev.vehicle_class != *cls) continue;
        s.durations.push_back(ev.duration);
        s.observed.push_back(1);
    }
    return s;
}

std::vector<LaneChangeEvent> load_events(const json& sec, const std::string& where) {
    return import_events(require_string(sec, "events", where));
}

json stats_to_json(const DescriptiveStats& s) {
    return json{{"count", s.count},  {"mean", s.mean}, {"std", s.std_dev},
                {"min", s.minimum},  {"p25", s.p25},   {"p50", s.p50},
                {"p75", s.p75},      {"max", s.maximum}, {"excluded", s.excluded}};
}

// ---------------------------------------------------------------- commands

int run_synth(const json& cfg, const GlobalArgs& g) {
    const json sec = section(cfg, "synth");
    SyntheticSpec spec = SyntheticSpec::defaults();
    auto fill_class = [&](ClassSpec& cls, const std::string& key) {
        if (!sec.contains(key)) return;
        const json& j = sec.at(key);
        try {
            cls.n_vehicles = j.value("n_vehicles", cls.n_vehicles);
            cls.n_lane_changes = j.value("n_lane_changes", cls.n_lane_changes);
            cls.headway_presence = j.value("headway_presence", cls.headway_presence);
            if (j.contains("duration_law")) cls.duration_law = law_from_json(j.at("duration_law"));
            if (j.contains("speed_law")) cls.speed_law = law_from_json(j.at("speed_law"));
            if (j.contains("thw_law")) cls.thw_law = law_from_json(j.at("thw_law"));
            if (j.contains("dhw_law")) cls.dhw_law = law_from_json(j.at("dhw_law"));
            if (j.contains("covariate_effects")) {
                for (const auto& [name, val] : j.at("covariate_effects").items()) {
                    cls.covariate_effects[name] = val.get<double>();
                }
            }
        } catch (const json::exception& e) {
            throw ConfigError("bad synth class spec '" + key + "': " + e.what());
        }
    };
    try {
        spec.recording_id = sec.value("recording_id", spec.recording_id);
        spec.frame_rate = sec.value("frame_rate", spec.frame_rate);
        spec.lane_width = sec.value("lane_width", spec.lane_width);
        spec.n_lanes = sec.value("n_lanes", spec.n_lanes);
        spec.lateral_velocity_noise = sec.value("noise", spec.lateral_velocity_noise);
        spec.margin_seconds = sec.value("margin_seconds", spec.margin_seconds);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad synth spec: ") + e.what());
    }
    fill_class(spec.cars, "cars");
    fill_class(spec.trucks, "trucks");

    SyntheticResult res = generate_synthetic(spec, g.seed);
    fs::path out = ensure_out_dir(g);
    save_recording(res.recording, (out / "tracks.csv").string(), (out / "vehicles.csv").string(),
                   (out / "recording.csv").string());
    export_events(res.ground_truth, (out / "ground_truth.csv").string());
    std::printf("synth: %zu vehicles, %zu planted lane changes, seed %llu\n",
                res.recording.vehicles.size(), res.ground_truth.size(),
                static_cast<unsigned long long>(g.seed));
    return 0;
}

int run_extract(const json& cfg, const GlobalArgs& g) {
    const json sec = section(cfg, "extract");
    // config validation strictly precedes any file I/O
    ExtractionParams params = extraction_params_from_json(sec);
    ColumnMap cmap = column_map_from_json(sec);
    std::string tracks = require_string(sec, "tracks", "extract");
    std::string vehicles = require_string(sec, "vehicles", "extract");
    std::string recording = require_string(sec, "recording", "extract");

    Recording rec = load_recording(tracks, vehicles, recording, cmap);
    auto findings = validate_recording(rec);
    auto events = detect_lane_changes(rec, params);

    fs::path out = ensure_out_dir(g);
    export_events(events, (out / "events.csv").string());

    std::size_t cars = 0, trucks = 0, flagged = 0;
    for (const auto& ev : events) {
        (ev.vehicle_class == VehicleClass::PassengerCar ? cars : trucks) += 1;
        if (ev.flagged_multilane) ++flagged;
    }
    std::ostringstream log;
    log << "vehicles: " << rec.vehicles.size() << "\n"
        << "validation findings: " << findings.size() << "\n"
        << "events total: " << events.size() << "\n"
        << "events cars: " << cars << "\n"
        << "events trucks: " << trucks << "\n"
        << "events flagged multilane: " << flagged << "\n";
    write_text(out / "extract_log.txt", log.str());
    json report{{"vehicles", rec.vehicles.size()},
                {"validation_findings", findings.size()},
                {"events_total", events.size()},
                {"events_cars", cars},
                {"events_trucks", trucks},
                {"events_flagged_multilane", flagged}};
    write_text(out / "extract_report.json", report.dump(2) + "\n");
    std::printf("extract: %zu events (%zu cars, %zu trucks) -> %s\n", events.size(), cars,
                trucks, (out / "events.csv").string().c_str());
    return 0;
}

int run_describe(const json& cfg, const GlobalArgs& g) {
    const json sec = section(cfg, "describe");
    auto events = load_events(sec, "describe");
    if (events.empty()) throw EmptySelection("describe: events file has no rows");
    std::vector<std::string> variables = {"duration", "speed", "thw", "dhw"};
    if (sec.contains("variables")) {
        try {
            variables = sec.at("variables").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad 'variables': ") + e.what());
        }
    }

    std::ostringstream text;
    json out_json = json::object();
    for (const auto& block : class_blocks(g.split_by_class)) {
        text << "[" << block.label << "]\n";
        json block_json = json::object();
        for (const auto& vname : variables) {
            SummaryVariable var = summary_variable_from_name(vname);
            try {
                DescriptiveStats s = summarize(events, var, block.filter);
                text << vname << ": count " << s.count << " mean " << fmt(s.mean) << " std "
                     << fmt(s.std_dev) << " min " << fmt(s.minimum) << " p25 " << fmt(s.p25)
                     << " p50 " << fmt(s.p50) << " p75 " << fmt(s.p75) << " max "
                     << fmt(s.maximum) << " excluded " << s.excluded << "\n";
                block_json[vname] = stats_to_json(s);
            } catch (const EmptySelection&) {
                text << vname << ": no data\n";
                block_json[vname] = nullptr;
            }
        }
        text << "\n";
        out_json[block.label] = block_json;
    }
    fs::path out = ensure_out_dir(g);
    write_text(out / "describe.txt", text.str());
    write_text(out / "describe.json", out_json.dump(2) + "\n");
    std::printf("describe: %zu events -> %s\n", events.size(), (out / "describe.txt").string().c_str());
    return 0;
}

std::vector<Family> families_from_json(const json& sec) {
    std::vector<std::string> names = {"exponential", "weibull", "lognormal", "loglogistic",
                                      "gengamma"};
    if (sec.contains("families")) {
        try {
            names = sec.at("families").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad 'families': ") + e.what());
        }
    }
    std::vector<Family> families;
    for (const auto& n : names) {
        try {
            families.push_back(family_from_name(n));
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
    }
    if (families.empty()) throw ConfigError("'families' must not be empty");
    return families;
}

int run_fit(const json& cfg, const GlobalArgs& g) {
    const json sec = section(cfg, "fit");
    std::vector<Family> families = families_from_json(sec);
    std::vector<double> grid = grid_from_json(sec);
    auto events = load_events(sec, "fit");
    if (events.empty()) throw EmptySelection("fit: events file has no rows");

    fs::path out = ensure_out_dir(g);
    std::ostringstream text;
    json out_json = json::object();
    for (const auto& block : class_blocks(g.split_by_class)) {
        Sample sample = durations_sample(events, block.filter);
        if (sample.size() == 0) {
            text << "[" << block.label << "]\nno events\n\n";
            out_json[block.label] = nullptr;
            continue;
        }
        ComparisonTable table = compare_models(sample, families);
        text << "[" << block.label << "] n=" << sample.size() << "\n"
             << comparison_to_csv(table) << "\n";
        out_json[block.label] = json::parse(comparison_to_json(table));
        write_text(out / ("fit_" + block.label + ".csv"), comparison_to_csv(table));

        KaplanMeierCurve km = kaplan_meier(sample);
        write_text(out / ("fit_km_" + block.label + ".csv"), curves_to_csv(emit_curves(km, grid)));
        if (table.best_by_aic) {
            for (const auto& row : table.rows) {
                if (row.family == *table.best_by_aic && row.fit) {
                    write_text(out / ("fit_curves_" + block.label + ".csv"),
                               curves_to_csv(emit_curves(row.fit->params, grid)));
                    break;
                }
            }
        }
    }
    write_text(out / "fit.txt", text.str());
    write_text(out / "fit.json", out_json.dump(2) + "\n");
    std::printf("fit: %zu events -> %s\n", events.size(), (out / "fit.json").string().c_str());
    return 0;
}

int run_aft(const json& cfg, const GlobalArgs& g) {
    const json sec = section(cfg, "aft");
    std::vector<std::string> law_names = {"weibull", "lognormal", "loglogistic"};
    if (sec.contains("laws")) {
        try {
            law_names = sec.at("laws").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad 'laws': ") + e.what());
        }
    }
    std::vector<AftLaw> laws;
    std::set<std::string> seen;
    bool duplicates = false;
    for (const auto& n : law_names) {
        if (!seen.insert(n).second) {
            duplicates = true;
            continue;
        }
        try {
            laws.push_back(aft_law_from_name(n));
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
    }
    if (laws.empty()) throw ConfigError("'laws' must not be empty");
    std::vector<std::string> covariates = {"speed", "thw", "dhw"};
    if (sec.contains("covariates")) {
        try {
            covariates = sec.at("covariates").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad 'covariates': ") + e.what());
        }
    }
    std::vector<double> grid = grid_from_json(sec);
    auto events = load_events(sec, "aft");
    if (events.empty()) throw EmptySelection("aft: events file has no rows");

    fs::path out = ensure_out_dir(g);
    std::ostringstream text;
    if (duplicates) text << "warning: duplicate laws in config were deduplicated\n\n";
    json out_json = json::object();
    for (const auto& block : class_blocks(g.split_by_class)) {
        std::size_t dropped = 0;
        RegressionData data =
            regression_data_from_events(events, covariates, block.filter, &dropped);
        if (data.n_rows() == 0) {
            text << "[" << block.label << "]\nno usable rows\n\n";
            out_json[block.label] = nullptr;
            continue;
        }
        RegressionReport report = regression_report(data, laws);
        text << "[" << block.label << "] n=" << data.n_rows() << " dropped=" << dropped << "\n"
             << regression_report_to_csv(report) << "\n";
        json block_json = json::parse(regression_report_to_json(report));
        block_json["dropped_rows"] = dropped;
        out_json[block.label] = block_json;
        write_text(out / ("aft_" + block.label + ".csv"), regression_report_to_csv(report));

        if (report.best_by_aic) {
            for (const auto& row : report.rows) {
                if (row.law == *report.best_by_aic && row.fit) {
                    for (std::size_t c = 0; c < covariates.size(); ++c) {
                        std::vector<double> values = {row.fit->covariate_min[c],
                                                      row.fit->covariate_means[c],
                                                      row.fit->covariate_max[c]};
                        auto curves = partial_effects(*row.fit, covariates[c], values, grid);
                        write_text(out / ("aft_partial_" + block.label + "_" + covariates[c] +
                                          ".csv"),
                                   partial_effects_to_csv(curves));
                    }
                    break;
                }
            }
        }
    }
    write_text(out / "aft.txt", text.str());
    write_text(out / "aft.json", out_json.dump(2) + "\n");
    std::printf("aft: %zu events -> %s\n", events.size(), (out / "aft.json").string().c_str());
    return 0;
}

int run_curves(const json& cfg, const GlobalArgs& g) {
    const json sec = section(cfg, "curves");
    std::vector<double> grid = grid_from_json(sec);
    fs::path out = ensure_out_dir(g);
    if (sec.contains("law")) {
        DistributionParams law = law_from_json(sec.at("law"));
        write_text(out / "curves.csv", curves_to_csv(emit_curves(law, grid)));
        std::printf("curves: %s law -> %s\n", family_name(law.family).c_str(),
                    (out / "curves.csv").string().c_str());
        return 0;
    }
    auto events = load_events(sec, "curves");
    if (events.empty()) throw EmptySelection("curves: events file has no rows");
    Family family;
    try {
        family = family_from_name(sec.value("family", "gengamma"));
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    Sample sample = durations_sample(events, std::nullopt);
    FitResult fit = fit_mle(family, sample);
    if (!fit.converged) throw NumericalError("curves: " + family_name(family) + " fit did not converge");
    write_text(out / "curves.csv", curves_to_csv(emit_curves(fit.params, grid)));
    write_text(out / "curves_km.csv",
               curves_to_csv(emit_curves(kaplan_meier(sample), grid)));
    std::printf("curves: fitted %s on %zu events -> %s\n", family_name(family).c_str(),
                events.size(), (out / "curves.csv").string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    GlobalArgs g;
    CLI::App app{"lane-change duration extraction and survival modeling"};
    app.require_subcommand(1);
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_option("--seed", g.seed, "random seed (default 1)");
    app.add_option("--out", g.out, "output directory (default .)");
    app.add_flag("--split-by-class,!--no-split-by-class", g.split_by_class,
                 "emit separate car/truck blocks (default on)");

    app.fallthrough();  // global flags may follow the subcommand
    auto* c_extract = app.add_subcommand("extract", "detect lane changes from trajectory CSVs");
    auto* c_describe = app.add_subcommand("describe", "descriptive statistics of events");
    auto* c_fit = app.add_subcommand("fit", "fit and compare duration families");
    auto* c_aft = app.add_subcommand("aft", "accelerated failure time regression");
    auto* c_curves = app.add_subcommand("curves", "emit survival/cumulative-hazard curves");
    auto* c_synth = app.add_subcommand("synth", "generate a synthetic recording");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "LCD_ERROR config %s\n", e.what());
        return 2;
    }

    try {
        json cfg = load_config(g.config_path);
        if (c_extract->parsed()) return run_extract(cfg, g);
        if (c_describe->parsed()) return run_describe(cfg, g);
        if (c_fit->parsed()) return run_fit(cfg, g);
        if (c_aft->parsed()) return run_aft(cfg, g);
        if (c_curves->parsed()) return run_curves(cfg, g);
        if (c_synth->parsed()) return run_synth(cfg, g);
        std::fprintf(stderr, "LCD_ERROR config no subcommand given\n");
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "LCD_ERROR config %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "LCD_ERROR numerical %s\n", e.what());
        return 4;
    } catch (const DataError& e) {
        std::fprintf(stderr, "LCD_ERROR data %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "LCD_ERROR data %s\n", e.what());
        return 3;
    }
}
