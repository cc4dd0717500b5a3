#pragma once

// Three-joint arm model in modified Denavit-Hartenberg form: two revolute
// shoulder joints, one revolute elbow joint, rigid wrist.
//
//   j  sigma  alpha   d    theta   r
//   1    0    +pi/2   0    theta1  0
//   2    0    -pi/2   0    theta2  0
//   3    0     0      d3   theta3  0
//   4    0     0      d4   0       0
//
// Each row maps frame j-1 to frame j as Rot(x,alpha) Trans(x,d) Rot(z,theta) Trans(z,r).

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ergo/mocap.hpp"
#include "ergo/types.hpp"

namespace ergo::kin {

inline constexpr double kSingularCos = 1e-6;
inline constexpr double kReachTolerance = 0.05;

struct DHRow {
    int sigma = 0;  // 0 = revolute
    double alpha = 0.0;
    double d = 0.0;
    double theta = 0.0;  // fixed angle, used when `variable` is false
    bool variable = false;
    double r = 0.0;
};

struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    RigidTransform operator*(const RigidTransform& rhs) const {
        return {rotation * rhs.rotation, rotation * rhs.translation + translation};
    }
    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    RigidTransform inverse() const {
        const Mat3 rt = rotation.transpose();
        return {rt, -(rt * translation)};
    }
    /// Orthonormal rotation with determinant +1, both to `tol`.
    bool is_valid(double tol = 1e-12) const;
};

/// Signed permutation from lab axes to model axes. Entry i names the lab
/// axis that becomes model axis i, e.g. {"+x", "+z", "-y"}.
struct AxisMapping {
    std::array<int, 3> source{0, 1, 2};
    std::array<int, 3> sign{1, 1, 1};

    static AxisMapping parse(const std::array<std::string, 3>& spec);
    std::array<std::string, 3> to_strings() const;
    Mat3 matrix() const;
};

struct JointLimits {
    std::array<std::pair<double, double>, 3> range{{{-EIGEN_PI, EIGEN_PI},
                                                    {-EIGEN_PI / 2, EIGEN_PI / 2},
                                                    {0.0, 5.0 * EIGEN_PI / 6.0}}};
};

struct JointAngles {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double theta3 = 0.0;
    bool singular = false;
    bool out_of_limits = false;
    bool reprojected = false;

    double operator[](std::size_t i) const { return i == 0 ? theta1 : i == 1 ? theta2 : theta3; }
    double& operator[](std::size_t i) { return i == 0 ? theta1 : i == 1 ? theta2 : theta3; }
};

struct ArmGeometry {
    double d3 = 0.3;
    double d4 = 0.25;
    std::array<DHRow, 4> dh_rows;
    AxisMapping axis_mapping;
    /// Lab frame to shoulder frame.
    RigidTransform base_transform;
    JointLimits joint_limits;

    /// Table rows for the given segment lengths, identity base transform.
    static ArmGeometry make(double d3, double d4);
    void validate() const;
    bool within_limits(const JointAngles& q) const;

    std::string to_json_text() const;
    static ArmGeometry from_json_text(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static ArmGeometry load(const std::filesystem::path& path);
};

struct FkResult {
    Vec3 elbow;
    Vec3 wrist;
    /// frames[j] maps frame j+1 to the shoulder base frame.
    std::array<RigidTransform, 4> frames;
};

RigidTransform dh_transform(const DHRow& row, double theta);

FkResult forward_kinematics(const ArmGeometry& geom, const JointAngles& q);

ArmGeometry calibrate_geometry(const mocap::ArticulationTrajectory& traj, const AxisMapping& mapping,
                               const JointLimits& limits = {});

/// Analytic inverse for one frame. Positions are in the shoulder base frame.
/// `theta1_hold` is used for theta1 when the frame is singular.
JointAngles inverse_kinematics_frame(const ArmGeometry& geom, const Vec3& elbow, const Vec3& wrist,
                                     double theta1_hold = 0.0);

struct JointTrajectory {
    std::vector<double> times;
    std::vector<JointAngles> angles;

    std::size_t size() const { return times.size(); }
    std::size_t singular_count() const;
};

JointTrajectory solve_trajectory(const ArmGeometry& geom, const mocap::ArticulationTrajectory& traj);

void write_joint_csv(const std::filesystem::path& path, const JointTrajectory& traj);
JointTrajectory read_joint_csv(const std::filesystem::path& path);

}  // namespace ergo::kin
