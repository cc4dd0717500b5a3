#pragma once

// End-to-end workflow: capture -> joint angles -> torques and load ->
// capacity -> report, with one artifact file per stage so any stage can be
// rerun from its inputs.

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ergo/dynamics.hpp"
#include "ergo/error.hpp"
#include "ergo/fatigue.hpp"
#include "ergo/kinematics.hpp"
#include "ergo/mocap.hpp"
#include "ergo/replay.hpp"

namespace ergo::pipeline {

namespace artifact {
inline constexpr const char* kTrajectory = "trajectory.csv";
inline constexpr const char* kIngest = "ingest.json";
inline constexpr const char* kGeometry = "geometry.json";
inline constexpr const char* kAngles = "angles.csv";
inline constexpr const char* kTorques = "torques.csv";
inline constexpr const char* kLoad = "load.csv";
inline constexpr const char* kCapacity = "capacity.csv";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kTransforms = "transforms.csv";
}  // namespace artifact

enum class LoadMode { JointTorque, DirectForce };

struct PipelineConfig {
    std::string subject = "subject";
    std::string trial = "trial";

    mocap::Units units = mocap::Units::Millimeters;
    double rate = 100.0;
    std::filesystem::path tracker_map;
    std::array<std::string, 3> axis_mapping{"+x", "+y", "+z"};
    std::size_t smoothing_window = 5;
    std::size_t max_gap = 10;
    kin::JointLimits joint_limits;

    dyn::SegmentInertia inertia;
    /// Expressed in the shoulder (model) frame.
    Vec3 gravity{0.0, -9.81, 0.0};
    bool inertial = true;
    Vec3 tau_max{60.0, 60.0, 40.0};
    LoadMode load_mode = LoadMode::JointTorque;
    int load_joint = 3;
    double mvc_force = 200.0;

    std::optional<double> mvc;
    double k = 1.0;
    std::optional<double> fatigue_dt_min;

    double replay_dt = 0.01;
    int replay_solver_iterations = 10;
    double replay_baumgarte_beta = 0.2;
    double replay_payload_radius = 0.05;

    std::optional<std::filesystem::path> output_dir;

    /// Capacity scale for the fatigue model in the units of the load source.
    double effective_mvc() const;
    fatigue::FatigueParams fatigue_params() const;
    void validate() const;

    /// Relative paths resolve against `base_dir`.
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static PipelineConfig load(const std::filesystem::path& path);
};

/// Error raised by a pipeline stage; the message is prefixed with the stage.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.kind(), "[" + stage + "] " + cause.what()), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

void stage_ingest(const PipelineConfig& config, const std::filesystem::path& capture,
                  const std::filesystem::path& out);
void stage_ik(const PipelineConfig& config, const std::filesystem::path& trajectory,
              const std::filesystem::path& out);
void stage_analyze(const PipelineConfig& config, const std::filesystem::path& angles,
                   const std::filesystem::path& geometry, const std::filesystem::path& out);
void stage_fatigue(const PipelineConfig& config, const std::filesystem::path& load,
                   const std::filesystem::path& out);

/// Statistics derived only from the CSV/JSON artifacts in `artifacts`.
nlohmann::ordered_json build_report(const PipelineConfig& config, const std::filesystem::path& artifacts);
void stage_report(const PipelineConfig& config, const std::filesystem::path& artifacts,
                  const std::filesystem::path& out);

/// Runs every stage into `out`. Inputs are checked before anything is written.
nlohmann::ordered_json run_pipeline(const PipelineConfig& config, const std::filesystem::path& capture,
                                    const std::filesystem::path& out);

struct ReplayScene {
    replay::World world;
    std::size_t upper_arm = 0;
    std::size_t forearm = 0;
    std::size_t hand = 0;
    std::size_t payload = 0;
    std::vector<replay::KinematicTrack> tracks;
};

/// Kinematic upper-arm, forearm and hand bodies following the FK frames of
/// `angles`, plus a dynamic payload ball-socketed at the wrist.
ReplayScene build_replay_scene(const PipelineConfig& config, const kin::ArmGeometry& geom,
                               const kin::JointTrajectory& angles, double payload_mass);

replay::TransformLog run_replay(const PipelineConfig& config, const std::filesystem::path& angles,
                                const std::filesystem::path& geometry, double payload_mass,
                                const std::filesystem::path& out);

}  // namespace ergo::pipeline
