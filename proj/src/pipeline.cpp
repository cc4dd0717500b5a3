#include "ergo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "ergo/csv.hpp"
#include "ergo/plots.hpp"

namespace ergo::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <class F>
void tagged(const char* stage, F&& body) {
    try {
        body();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e);
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
}

void require_file(const fs::path& path, const char* what) {
    if (!fs::is_regular_file(path)) throw Error(ErrorKind::Io, std::string(what) + " not found: " + path.string());
}

Vec3 vec3_from(const json& j) {
    const auto a = j.get<std::array<double, 3>>();
    return {a[0], a[1], a[2]};
}

ordered_json stats_of(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return {{"min", *lo}, {"max", *hi}, {"range", *hi - *lo}};
}

double peak_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double mean_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "subject", "trial", "units", "rate", "tracker_map", "axis_mapping", "smoothing_window", "max_gap",
        "joint_limits", "upper_arm_mass", "forearm_mass", "com_ratio_upper", "com_ratio_fore", "payload_mass",
        "gravity", "inertial", "tau_max", "load_mode", "load_joint", "mvc_force", "mvc", "k", "fatigue_dt_min",
        "replay_dt", "replay_solver_iterations", "replay_baumgarte_beta", "replay_payload_radius", "output_dir"};
    return keys;
}

replay::Quat quat_of(const Mat3& r) { return replay::Quat(r).normalized(); }

}  // namespace

double PipelineConfig::effective_mvc() const {
    if (mvc) return *mvc;
    return load_mode == LoadMode::JointTorque ? tau_max[load_joint - 1] : mvc_force;
}

fatigue::FatigueParams PipelineConfig::fatigue_params() const {
    fatigue::FatigueParams p;
    p.mvc = effective_mvc();
    p.k = k;
    return p;
}

void PipelineConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::Parameter, "config: " + msg); };
    if (!(rate > 0.0)) fail("rate must be > 0");
    if (smoothing_window == 0 || smoothing_window % 2 == 0) fail("smoothing_window must be odd and >= 1");
    kin::AxisMapping::parse(axis_mapping);
    inertia.validate();
    if (!gravity.allFinite()) fail("gravity must be finite");
    if (!(tau_max.array() > 0.0).all()) fail("tau_max entries must be > 0");
    if (load_joint < 1 || load_joint > 3) fail("load_joint must be 1, 2 or 3");
    if (load_mode == LoadMode::DirectForce && !(mvc_force > 0.0)) fail("mvc_force must be > 0");
    if (mvc && !(*mvc > 0.0)) fail("mvc must be > 0");
    if (!(k > 0.0)) fail("k must be > 0");
    if (fatigue_dt_min && !(*fatigue_dt_min > 0.0)) fail("fatigue_dt_min must be > 0");
    if (!(replay_dt > 0.0)) fail("replay_dt must be > 0");
    if (replay_solver_iterations < 1) fail("replay_solver_iterations must be >= 1");
    if (!(replay_payload_radius > 0.0)) fail("replay_payload_radius must be > 0");
    for (const auto& [lo, hi] : joint_limits.range) {
        if (!(lo <= hi)) fail("joint_limits must be ordered (min, max)");
    }
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw Error(ErrorKind::Format, "config: top level must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!known_keys().count(key)) throw Error(ErrorKind::Format, "config: unknown key '" + key + "'");
    }
    PipelineConfig c;
    auto resolve = [&base_dir](const std::string& p) {
        fs::path path(p);
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    try {
        c.subject = j.value("subject", c.subject);
        c.trial = j.value("trial", c.trial);
        if (j.contains("units")) c.units = mocap::parse_units(j.at("units").get<std::string>());
        c.rate = j.value("rate", c.rate);
        if (j.contains("tracker_map")) c.tracker_map = resolve(j.at("tracker_map").get<std::string>());
        if (j.contains("axis_mapping")) c.axis_mapping = j.at("axis_mapping").get<std::array<std::string, 3>>();
        c.smoothing_window = j.value("smoothing_window", c.smoothing_window);
        c.max_gap = j.value("max_gap", c.max_gap);
        if (j.contains("joint_limits")) {
            const auto lim = j.at("joint_limits").get<std::vector<std::array<double, 2>>>();
            if (lim.size() != 3) throw Error(ErrorKind::Format, "config: joint_limits needs three entries");
            for (std::size_t i = 0; i < 3; ++i) c.joint_limits.range[i] = {lim[i][0], lim[i][1]};
        }
        c.inertia.upper_arm_mass = j.value("upper_arm_mass", c.inertia.upper_arm_mass);
        c.inertia.forearm_mass = j.value("forearm_mass", c.inertia.forearm_mass);
        c.inertia.com_ratio_upper = j.value("com_ratio_upper", c.inertia.com_ratio_upper);
        c.inertia.com_ratio_fore = j.value("com_ratio_fore", c.inertia.com_ratio_fore);
        c.inertia.payload_mass = j.value("payload_mass", c.inertia.payload_mass);
        if (j.contains("gravity")) c.gravity = vec3_from(j.at("gravity"));
        c.inertial = j.value("inertial", c.inertial);
        if (j.contains("tau_max")) c.tau_max = vec3_from(j.at("tau_max"));
        if (j.contains("load_mode")) {
            const auto mode = j.at("load_mode").get<std::string>();
            if (mode == "joint_torque") c.load_mode = LoadMode::JointTorque;
            else if (mode == "direct_force") c.load_mode = LoadMode::DirectForce;
            else throw Error(ErrorKind::Format, "config: unknown load_mode '" + mode + "'");
        }
        c.load_joint = j.value("load_joint", c.load_joint);
        c.mvc_force = j.value("mvc_force", c.mvc_force);
        if (j.contains("mvc")) c.mvc = j.at("mvc").get<double>();
        c.k = j.value("k", c.k);
        if (j.contains("fatigue_dt_min")) c.fatigue_dt_min = j.at("fatigue_dt_min").get<double>();
        c.replay_dt = j.value("replay_dt", c.replay_dt);
        c.replay_solver_iterations = j.value("replay_solver_iterations", c.replay_solver_iterations);
        c.replay_baumgarte_beta = j.value("replay_baumgarte_beta", c.replay_baumgarte_beta);
        c.replay_payload_radius = j.value("replay_payload_radius", c.replay_payload_radius);
        if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Format, std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    require_file(path, "config file");
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Format, "config " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

void stage_ingest(const PipelineConfig& config, const fs::path& capture, const fs::path& out) {
    tagged("ingest", [&] {
        require_file(capture, "capture file");
        require_file(config.tracker_map, "tracker map");
        const auto raw = mocap::parse_capture_csv(capture, config.units);
        const auto map = mocap::TrackerMap::load(config.tracker_map);
        const auto result = mocap::ingest(raw, map, {config.max_gap, config.smoothing_window, config.rate});
        mocap::write_articulation_csv(out / artifact::kTrajectory, result.trajectory);

        ordered_json info;
        info["residual_gaps"] = ordered_json::array();
        for (const auto& g : result.residual_gaps) {
            info["residual_gaps"].push_back(
                {{"marker", g.label}, {"first_frame", g.first}, {"last_frame", g.last}, {"at_boundary", g.at_boundary}});
        }
        info["rigidity_violations"] = result.trajectory.rigidity_violations;
        info["warnings"] = result.trajectory.warnings;
        write_text(out / artifact::kIngest, info.dump(2) + "\n");
    });
}

void stage_ik(const PipelineConfig& config, const fs::path& trajectory, const fs::path& out) {
    tagged("ik", [&] {
        require_file(trajectory, "trajectory file");
        const auto traj = mocap::read_articulation_csv(trajectory);
        const auto geom =
            kin::calibrate_geometry(traj, kin::AxisMapping::parse(config.axis_mapping), config.joint_limits);
        const auto angles = kin::solve_trajectory(geom, traj);
        geom.save(out / artifact::kGeometry);
        kin::write_joint_csv(out / artifact::kAngles, angles);
    });
}

void stage_analyze(const PipelineConfig& config, const fs::path& angles, const fs::path& geometry,
                   const fs::path& out) {
    tagged("analyze", [&] {
        require_file(angles, "angles file");
        require_file(geometry, "geometry file");
        const auto traj = kin::read_joint_csv(angles);
        auto geom = kin::ArmGeometry::load(geometry);
        const auto torques = dyn::torque_series(geom, config.inertia, traj, config.gravity, config.inertial);
        dyn::write_torque_csv(out / artifact::kTorques, torques);

        dyn::LoadProfile load;
        if (config.load_mode == LoadMode::JointTorque) {
            load = dyn::load_profile(torques, config.tau_max, config.load_joint);
        } else {
            const std::vector<double> force(traj.size(), config.inertia.payload_mass * config.gravity.norm());
            load = dyn::direct_load_profile(traj.times, force, config.mvc_force);
        }
        dyn::write_load_csv(out / artifact::kLoad, load);
    });
}

void stage_fatigue(const PipelineConfig& config, const fs::path& load_path, const fs::path& out) {
    tagged("fatigue", [&] {
        require_file(load_path, "load file");
        const auto load = dyn::read_load_csv(load_path);
        double dt = 0.0;
        if (config.fatigue_dt_min) {
            dt = *config.fatigue_dt_min;
        } else {
            if (load.size() < 2) throw Error(ErrorKind::InsufficientData, "load profile needs two samples");
            dt = std::numeric_limits<double>::infinity();
            for (std::size_t i = 1; i < load.size(); ++i) {
                dt = std::min(dt, (load.times[i] / 60.0) - (load.times[i - 1] / 60.0));
            }
        }
        const auto capacity = fatigue::integrate_capacity(config.fatigue_params(), load, dt);
        fatigue::write_capacity_csv(out / artifact::kCapacity, capacity);
    });
}

ordered_json build_report(const PipelineConfig& config, const fs::path& artifacts) {
    ordered_json report;
    tagged("report", [&] {
        const auto angles = csv::read_numeric(artifacts / artifact::kAngles);
        const auto torques = csv::read_numeric(artifacts / artifact::kTorques);
        const auto load = dyn::read_load_csv(artifacts / artifact::kLoad);
        auto capacity = fatigue::read_capacity_csv(artifacts / artifact::kCapacity);
        capacity.k = config.k;
        capacity.mvc = config.effective_mvc();

        const auto times = angles.series("time");
        report["subject"] = config.subject;
        report["trial"] = config.trial;
        report["frames"] = times.size();
        report["duration_s"] = times.empty() ? 0.0 : times.back() - times.front();

        auto& ja = report["joint_angles"] = ordered_json::object();
        for (const char* name : {"theta1", "theta2", "theta3"}) {
            const auto v = angles.series(name);
            auto s = stats_of(v);
            s["peak_velocity"] = v.size() >= 3 ? peak_abs(dyn::differentiate(times, v, 1)) : 0.0;
            ja[name] = s;
        }
        auto& tq = report["torques"] = ordered_json::object();
        for (const char* name : {"tau1", "tau2", "tau3"}) {
            const auto v = torques.series(name);
            tq[name] = {{"peak", peak_abs(v)}, {"mean_abs", mean_abs(v)}};
        }
        const auto [flo, fhi] = std::minmax_element(load.f.begin(), load.f.end());
        double fsum = 0.0;
        for (double f : load.f) fsum += f;
        report["load"] = {{"mean", fsum / static_cast<double>(load.size())},
                          {"min", *flo},
                          {"peak", *fhi},
                          {"over_limit_frames", std::count(load.over_limit.begin(), load.over_limit.end(), true)}};

        const auto summary = fatigue::capacity_summary(capacity, load);
        report["capacity"] = ordered_json::parse(summary.to_json_text());
        report["fatigue_params"] = {{"mvc", capacity.mvc}, {"k", capacity.k}};

        const auto sing = angles.series("singular");
        report["singular_frames"] = std::count(sing.begin(), sing.end(), 1.0);

        const auto ingest_path = artifacts / artifact::kIngest;
        if (fs::is_regular_file(ingest_path)) {
            const auto info = json::parse(read_text(ingest_path));
            report["residual_gaps"] = info.at("residual_gaps");
            report["rigidity_violation_frames"] = info.at("rigidity_violations").size();
        } else {
            report["residual_gaps"] = ordered_json::array();
            report["rigidity_violation_frames"] = 0;
        }
    });
    return report;
}

void stage_report(const PipelineConfig& config, const fs::path& artifacts, const fs::path& out) {
    const auto report = build_report(config, artifacts);
    tagged("report", [&] {
        write_text(out / artifact::kReport, report.dump(2) + "\n");
        plots::render_plots(artifacts, out);
    });
}

ordered_json run_pipeline(const PipelineConfig& config, const fs::path& capture, const fs::path& out) {
    config.validate();
    require_file(capture, "capture file");
    require_file(config.tracker_map, "tracker map");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + out.string() + ": " + ec.message());

    stage_ingest(config, capture, out);
    stage_ik(config, out / artifact::kTrajectory, out);
    stage_analyze(config, out / artifact::kAngles, out / artifact::kGeometry, out);
    stage_fatigue(config, out / artifact::kLoad, out);
    stage_report(config, out, out);
    return build_report(config, out);
}

ReplayScene build_replay_scene(const PipelineConfig& config, const kin::ArmGeometry& geom,
                               const kin::JointTrajectory& angles, double payload_mass) {
    if (angles.size() == 0) throw Error(ErrorKind::InsufficientData, "replay: empty joint trajectory");
    ReplayScene scene;
    auto& world = scene.world;
    world.gravity = config.gravity;
    world.dt = config.replay_dt;
    world.solver_iterations = config.replay_solver_iterations;
    world.baumgarte_beta = config.replay_baumgarte_beta;
    world.validate();

    scene.tracks.resize(3);
    for (auto& track : scene.tracks) {
        track.times = angles.times;
        track.poses.reserve(angles.size());
    }
    for (const auto& q : angles.angles) {
        const auto fk = kin::forward_kinematics(geom, q);
        scene.tracks[0].poses.push_back({Vec3::Zero(), quat_of(fk.frames[1].rotation)});
        scene.tracks[1].poses.push_back({fk.elbow, quat_of(fk.frames[2].rotation)});
        scene.tracks[2].poses.push_back({fk.wrist, quat_of(fk.frames[3].rotation)});
    }

    auto kinematic = [](std::string name, const replay::Pose& pose) {
        replay::RigidBody b;
        b.name = std::move(name);
        b.kind = replay::BodyKind::Kinematic;
        b.mass = 0.0;
        b.shape = replay::Sphere{0.04};
        b.position = pose.position;
        b.orientation = pose.orientation;
        return b;
    };
    scene.upper_arm = world.add_body(kinematic("upper_arm", scene.tracks[0].poses[0]));
    scene.forearm = world.add_body(kinematic("forearm", scene.tracks[1].poses[0]));
    scene.hand = world.add_body(kinematic("hand", scene.tracks[2].poses[0]));
    scene.tracks[0].body = scene.upper_arm;
    scene.tracks[1].body = scene.forearm;
    scene.tracks[2].body = scene.hand;

    replay::RigidBody payload;
    payload.name = "payload";
    payload.kind = replay::BodyKind::Dynamic;
    payload.mass = payload_mass;
    payload.shape = replay::Sphere{config.replay_payload_radius};
    payload.position = scene.tracks[2].poses[0].position;
    scene.payload = replay::attach_payload(world, scene.hand, payload);
    return scene;
}

replay::TransformLog run_replay(const PipelineConfig& config, const fs::path& angles_path,
                                const fs::path& geometry_path, double payload_mass, const fs::path& out) {
    replay::TransformLog log;
    tagged("replay", [&] {
        require_file(angles_path, "angles file");
        require_file(geometry_path, "geometry file");
        const auto angles = kin::read_joint_csv(angles_path);
        const auto geom = kin::ArmGeometry::load(geometry_path);
        auto scene = build_replay_scene(config, geom, angles, payload_mass);
        log.append(0, scene.world);
        replay::drive_kinematic(scene.world, scene.tracks, &log);
        log.write_csv(out / artifact::kTransforms);
    });
    return log;
}

}  // namespace ergo::pipeline
