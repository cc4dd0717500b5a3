#pragma once

// Small discrete rigid-body world. One step runs, in order: gravity,
// broadphase (all-pairs AABB), narrowphase (sphere-sphere, sphere-half-space),
// sequential-impulse velocity solve with Baumgarte bias, semi-implicit
// integration, world-transform update.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ergo/types.hpp"

namespace ergo::replay {

using Quat = Eigen::Quaterniond;

enum class BodyKind { Kinematic, Dynamic };

struct Sphere {
    double radius = 0.1;
};

/// Solid region is {x : normal . x < offset} in the body frame.
struct HalfSpace {
    Vec3 normal = Vec3::UnitZ();
    double offset = 0.0;
};

using Shape = std::variant<Sphere, HalfSpace>;

struct Pose {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();
};

struct RigidBody {
    std::string name;
    BodyKind kind = BodyKind::Dynamic;
    double mass = 1.0;
    Shape shape = Sphere{};
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();
    Vec3 linear_velocity = Vec3::Zero();
    Vec3 angular_velocity = Vec3::Zero();

    double inverse_mass() const { return kind == BodyKind::Dynamic ? 1.0 / mass : 0.0; }
    /// Scalar inverse inertia; spheres use 2/5 m r^2.
    double inverse_inertia() const;
    Pose pose() const { return {position, orientation}; }
};

struct BallSocketConstraint {
    std::size_t body_a = 0;
    std::size_t body_b = 0;
    Vec3 anchor_a = Vec3::Zero();  // body-a frame
    Vec3 anchor_b = Vec3::Zero();  // body-b frame
};

struct Contact {
    std::size_t body_a = 0;
    std::size_t body_b = 0;
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();  // from a towards b
    double penetration = 0.0;
};

struct StepReport {
    std::vector<std::pair<std::size_t, std::size_t>> broadphase_pairs;
    std::vector<Contact> contacts;
    /// Total impulse applied to body b of each constraint during the step.
    std::vector<Vec3> constraint_impulses;
};

class World {
public:
    Vec3 gravity{0.0, 0.0, -9.81};
    double dt = 0.01;
    int solver_iterations = 10;
    double baumgarte_beta = 0.2;

    std::size_t add_body(RigidBody body);
    std::size_t add_constraint(const BallSocketConstraint& constraint);

    const std::vector<RigidBody>& bodies() const { return bodies_; }
    const std::vector<BallSocketConstraint>& constraints() const { return constraints_; }
    RigidBody& body(std::size_t index);
    const RigidBody& body(std::size_t index) const;
    std::optional<std::size_t> find_body(const std::string& name) const;

    /// Advances the world by one dt.
    void step();
    const StepReport& last_step() const { return last_step_; }

    /// Sets a kinematic body's velocities so the next step lands on `target`.
    void set_kinematic_target(std::size_t index, const Pose& target);

    Vec3 world_anchor_a(std::size_t constraint) const;
    Vec3 world_anchor_b(std::size_t constraint) const;
    double anchor_separation(std::size_t constraint) const;

    /// Payload attached to `wrist`, if any.
    std::optional<std::size_t> payload_of(std::size_t wrist) const;

    void validate() const;

    static World from_json_text(const std::string& text);
    static World load(const std::filesystem::path& path);

private:
    friend std::size_t attach_payload(World& world, std::size_t wrist_body, RigidBody payload);

    std::vector<RigidBody> bodies_;
    std::vector<BallSocketConstraint> constraints_;
    std::vector<std::pair<std::size_t, std::size_t>> payloads_;
    StepReport last_step_;
};

/// Functional form: returns the world advanced by one dt.
World step(World world);

struct TransformRecord {
    std::size_t step = 0;
    std::size_t body_id = 0;
    Vec3 position;
    Quat orientation;
};

struct TransformLog {
    std::vector<TransformRecord> records;

    void append(std::size_t step, const World& world);
    void write_csv(const std::filesystem::path& path) const;
};

struct KinematicTrack {
    std::size_t body = 0;
    std::vector<double> times;
    std::vector<Pose> poses;
};

/// Steps the world once per pose after the first, driving every track's body
/// onto its next pose. The first pose of each track must match the body's
/// current state. Each step is appended to `log` when supplied.
void drive_kinematic(World& world, const std::vector<KinematicTrack>& tracks, TransformLog* log = nullptr);

/// Adds `payload` (dynamic, mass > 0) and a ball-socket joint between the
/// wrist body's origin and the payload centre. Returns the payload index.
std::size_t attach_payload(World& world, std::size_t wrist_body, RigidBody payload);

/// Steps the world `steps` times, logging after every step (1-based).
TransformLog export_transforms(World& world, std::size_t steps);

}  // namespace ergo::replay
