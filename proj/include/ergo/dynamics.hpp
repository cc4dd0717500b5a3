#pragma once

// Point-mass arm dynamics: joint torques by Jacobian transpose, numeric
// differentiation of uniform series and the relative muscle-load profile.

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "ergo/kinematics.hpp"
#include "ergo/types.hpp"

namespace ergo::dyn {

inline constexpr double kJacobianStep = 1e-6;

struct SegmentInertia {
    double upper_arm_mass = 2.0;
    double forearm_mass = 1.5;
    double com_ratio_upper = 0.5;
    double com_ratio_fore = 0.5;
    double payload_mass = 0.0;

    void validate() const;
};

enum class Segment { UpperArm, Forearm };

/// A point fixed on a segment, `ratio` of the way from its proximal joint.
struct PointDescriptor {
    Segment segment = Segment::Forearm;
    double ratio = 1.0;

    static PointDescriptor elbow() { return {Segment::UpperArm, 1.0}; }
    static PointDescriptor wrist() { return {Segment::Forearm, 1.0}; }
};

struct ComPoints {
    Vec3 upper_com;
    Vec3 fore_com;
    Vec3 payload_point;
};

/// Differentiates a uniform series: central differences inside, one-sided
/// second-order stencils at the ends. Order 2 applies the stencil twice.
std::vector<double> differentiate(std::span<const double> times, std::span<const double> values, int order);
std::vector<Vec3> differentiate(std::span<const double> times, std::span<const Vec3> values, int order);

Vec3 point_position(const kin::ArmGeometry& geom, const kin::JointAngles& q, PointDescriptor point);

ComPoints com_positions(const kin::ArmGeometry& geom, const SegmentInertia& inertia, const kin::JointAngles& q);

/// d(point)/d(theta1, theta2, theta3) by central differences.
Mat3 positional_jacobian(const kin::ArmGeometry& geom, const kin::JointAngles& q, PointDescriptor point);

/// Holding torque (gravity-opposing) for the pose.
Vec3 static_torques(const kin::ArmGeometry& geom, const SegmentInertia& inertia, const kin::JointAngles& q,
                    const Vec3& gravity);

/// Point-mass inertial torque sum J^T m a for known point accelerations
/// ordered as upper com, forearm com, payload.
Vec3 inertial_torques(const kin::ArmGeometry& geom, const SegmentInertia& inertia, const kin::JointAngles& q,
                      const std::array<Vec3, 3>& point_accelerations);

/// Static plus inertial torque for one frame from joint rates, with point
/// accelerations a = J qdd + (dJ/dt) qd.
Vec3 dynamic_torques(const kin::ArmGeometry& geom, const SegmentInertia& inertia, const kin::JointAngles& q,
                     const Vec3& qd, const Vec3& qdd, const Vec3& gravity);

struct TorqueSeries {
    std::vector<double> times;
    std::vector<Vec3> tau;

    std::size_t size() const { return times.size(); }
};

/// Torques over a joint trajectory. With `inertial`, point accelerations are
/// obtained by differentiating the com positions twice along the trajectory.
TorqueSeries torque_series(const kin::ArmGeometry& geom, const SegmentInertia& inertia,
                           const kin::JointTrajectory& traj, const Vec3& gravity, bool inertial);

struct LoadProfile {
    std::vector<double> times;  // seconds
    std::vector<double> f;
    std::vector<bool> over_limit;

    std::size_t size() const { return times.size(); }
};

/// f = |tau_joint| / tau_max_joint; joint is 1-based.
LoadProfile load_profile(const TorqueSeries& torques, const Vec3& tau_max, int joint);

/// f = force / mvc_force for pure holding tasks.
LoadProfile direct_load_profile(std::span<const double> times, std::span<const double> force, double mvc_force);

void write_torque_csv(const std::filesystem::path& path, const TorqueSeries& series);
TorqueSeries read_torque_csv(const std::filesystem::path& path);
void write_load_csv(const std::filesystem::path& path, const LoadProfile& load);
LoadProfile read_load_csv(const std::filesystem::path& path);

}  // namespace ergo::dyn
