// ergopipe: command-line front end for the capture-to-fatigue workflow.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergo/error.hpp"
#include "ergo/pipeline.hpp"
#include "ergo/synthetic.hpp"
#include "ergo/version.hpp"

namespace fs = std::filesystem;
using namespace ergo;

namespace {

constexpr int kExitProcessing = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

pipeline::PipelineConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    try {
        return pipeline::PipelineConfig::load(path);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

void require_inputs(const std::vector<fs::path>& paths) {
    for (const auto& p : paths) {
        if (!fs::is_regular_file(p)) throw UsageError("input file not found: " + p.string());
    }
}

fs::path prepare_out(const std::string& out) {
    if (out.empty()) throw UsageError("--out is required");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw UsageError("cannot create output directory " + out + ": " + ec.message());
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ergopipe - motion capture to arm ergonomics (angles, torques, muscle fatigue)"};
    app.set_version_flag("--version", std::string("ergopipe ") + kVersion);
    app.require_subcommand(1);

    std::string config_path, capture, out, tracker_map, trajectory, angles, geometry, load, artifacts, spec_path;
    double payload_mass = 5.0;

    auto add_config = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("--config", config_path, "Pipeline config (JSON)");
        if (required) opt->required();
    };

    auto* run = app.add_subcommand("run", "Run ingest, ik, analyze, fatigue and report");
    add_config(run, true);
    run->add_option("--capture", capture, "Capture CSV")->required();
    run->add_option("--out", out, "Output directory (defaults to the config output_dir)");
    run->add_option("--tracker-map", tracker_map, "Tracker map JSON (overrides config)");

    auto* ingest = app.add_subcommand("ingest", "Capture CSV -> trajectory.csv");
    add_config(ingest, false);
    ingest->add_option("--capture", capture, "Capture CSV")->required();
    ingest->add_option("--tracker-map", tracker_map, "Tracker map JSON (overrides config)");
    ingest->add_option("--out", out, "Output directory")->required();

    auto* ik = app.add_subcommand("ik", "trajectory.csv -> geometry.json, angles.csv");
    add_config(ik, false);
    ik->add_option("--trajectory", trajectory, "Articulation trajectory CSV")->required();
    ik->add_option("--out", out, "Output directory")->required();

    auto* analyze = app.add_subcommand("analyze", "angles.csv -> torques.csv, load.csv");
    add_config(analyze, false);
    analyze->add_option("--angles", angles, "Joint trajectory CSV")->required();
    analyze->add_option("--geometry", geometry, "Geometry JSON")->required();
    analyze->add_option("--out", out, "Output directory")->required();

    auto* fat = app.add_subcommand("fatigue", "load.csv -> capacity.csv");
    add_config(fat, false);
    fat->add_option("--load", load, "Load profile CSV")->required();
    fat->add_option("--out", out, "Output directory")->required();

    auto* report = app.add_subcommand("report", "Artifacts -> report.json and SVG plots");
    add_config(report, false);
    report->add_option("--artifacts", artifacts, "Directory holding the stage CSVs")->required();
    report->add_option("--out", out, "Output directory (defaults to --artifacts)");

    auto* rep = app.add_subcommand("replay", "Replay angles in the rigid-body world -> transforms.csv");
    add_config(rep, false);
    rep->add_option("--angles", angles, "Joint trajectory CSV")->required();
    rep->add_option("--geometry", geometry, "Geometry JSON")->required();
    rep->add_option("--payload-mass", payload_mass, "Carried object mass [kg]")->capture_default_str();
    rep->add_option("--out", out, "Output directory")->required();

    auto* synth = app.add_subcommand("synth", "Generate a synthetic capture CSV from a motion description");
    synth->add_option("--spec", spec_path, "Motion description JSON")->required();
    synth->add_option("--out", out, "Capture CSV to write")->required();
    synth->add_option("--tracker-map", tracker_map, "Also write the matching tracker map JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (synth->parsed()) {
            require_inputs({spec_path});
            synth::MotionSpec spec;
            try {
                spec = synth::MotionSpec::load(spec_path);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            const auto generated = synth::generate_synthetic(spec, out);
            if (!tracker_map.empty()) {
                std::ofstream map_out(tracker_map, std::ios::binary);
                if (!map_out) throw UsageError("cannot write " + tracker_map);
                map_out << generated.tracker_map.to_json_text();
            }
            return 0;
        }

        auto config = load_config(config_path);
        if (!tracker_map.empty()) config.tracker_map = tracker_map;

        if (run->parsed()) {
            if (out.empty() && config.output_dir) out = config.output_dir->string();
            require_inputs({capture, config.tracker_map});
            const auto result = pipeline::run_pipeline(config, capture, prepare_out(out));
            std::cout << "run complete: " << result["frames"] << " frames, end capacity ratio "
                      << result["capacity"]["end_capacity_ratio"] << "\n";
        } else if (ingest->parsed()) {
            require_inputs({capture, config.tracker_map});
            pipeline::stage_ingest(config, capture, prepare_out(out));
        } else if (ik->parsed()) {
            require_inputs({trajectory});
            pipeline::stage_ik(config, trajectory, prepare_out(out));
        } else if (analyze->parsed()) {
            require_inputs({angles, geometry});
            pipeline::stage_analyze(config, angles, geometry, prepare_out(out));
        } else if (fat->parsed()) {
            require_inputs({load});
            pipeline::stage_fatigue(config, load, prepare_out(out));
        } else if (report->parsed()) {
            const fs::path dir = artifacts;
            require_inputs({dir / pipeline::artifact::kAngles, dir / pipeline::artifact::kTorques,
                            dir / pipeline::artifact::kLoad, dir / pipeline::artifact::kCapacity});
            pipeline::stage_report(config, dir, prepare_out(out.empty() ? artifacts : out));
        } else if (rep->parsed()) {
            require_inputs({angles, geometry});
            pipeline::run_replay(config, angles, geometry, payload_mass, prepare_out(out));
        }
    } catch (const UsageError& e) {
        std::cerr << "ergopipe: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "ergopipe: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::Io ? kExitUsage : kExitProcessing;
    } catch (const std::exception& e) {
        std::cerr << "ergopipe: " << e.what() << "\n";
        return kExitProcessing;
    }
    return 0;
}
