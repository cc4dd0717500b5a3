#include "ergo/dynamics.hpp"

#include <cmath>
#include <string>

#include "ergo/csv.hpp"
#include "ergo/error.hpp"

namespace ergo::dyn {

namespace {

constexpr double kGridTolerance = 1e-9;

double uniform_step(std::span<const double> times) {
    if (times.size() < 3) {
        throw Error(ErrorKind::Grid, "differentiate: need at least 3 samples, got " + std::to_string(times.size()));
    }
    const double h = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(h > 0.0)) throw Error(ErrorKind::Grid, "differentiate: times must increase");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (std::abs((times[i] - times[i - 1]) - h) > kGridTolerance) {
            throw Error(ErrorKind::Grid, "differentiate: non-uniform grid at sample " + std::to_string(i));
        }
    }
    return h;
}

template <class T>
std::vector<T> first_derivative(std::span<const T> v, double h) {
    const std::size_t n = v.size();
    std::vector<T> d(n);
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    return d;
}

template <class T>
std::vector<T> derivative(std::span<const double> times, std::span<const T> values, int order) {
    if (order != 1 && order != 2) throw Error(ErrorKind::Parameter, "differentiate: order must be 1 or 2");
    if (values.size() != times.size()) throw Error(ErrorKind::Alignment, "differentiate: size mismatch");
    const double h = uniform_step(times);
    auto d = first_derivative(values, h);
    if (order == 2) d = first_derivative(std::span<const T>(d), h);
    return d;
}

Vec3 segment_point(const kin::FkResult& fk, PointDescriptor point) {
    if (point.segment == Segment::UpperArm) return point.ratio * fk.elbow;
    return fk.elbow + point.ratio * (fk.wrist - fk.elbow);
}

std::array<std::pair<PointDescriptor, double>, 3> mass_points(const SegmentInertia& inertia) {
    return {{{{Segment::UpperArm, inertia.com_ratio_upper}, inertia.upper_arm_mass},
             {{Segment::Forearm, inertia.com_ratio_fore}, inertia.forearm_mass},
             {PointDescriptor::wrist(), inertia.payload_mass}}};
}

kin::JointAngles offset(const kin::JointAngles& q, const Vec3& dq) {
    kin::JointAngles out = q;
    out.theta1 += dq.x();
    out.theta2 += dq.y();
    out.theta3 += dq.z();
    return out;
}

}  // namespace

void SegmentInertia::validate() const {
    for (double m : {upper_arm_mass, forearm_mass, payload_mass}) {
        if (!(m >= 0.0) || !std::isfinite(m)) throw Error(ErrorKind::Parameter, "masses must be >= 0");
    }
    for (double r : {com_ratio_upper, com_ratio_fore}) {
        if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorKind::Parameter, "com ratios must lie in [0, 1]");
    }
}

std::vector<double> differentiate(std::span<const double> times, std::span<const double> values, int order) {
    return derivative(times, values, order);
}

std::vector<Vec3> differentiate(std::span<const double> times, std::span<const Vec3> values, int order) {
    return derivative(times, values, order);
}

Vec3 point_position(const kin::ArmGeometry& geom, const kin::JointAngles& q, PointDescriptor point) {
    return segment_point(kin::forward_kinematics(geom, q), point);
}

ComPoints com_positions(const kin::ArmGeometry& geom, const SegmentInertia& inertia, const kin::JointAngles& q) {
    inertia.validate();
    const auto fk = kin::forward_kinematics(geom, q);
    return {segment_point(fk, {Segment::UpperArm, inertia.com_ratio_upper}),
            segment_point(fk, {Segment::Forearm, inertia.com_ratio_fore}), fk.wrist};
}

Mat3 positional_jacobian(const kin::ArmGeometry& geom, const kin::JointAngles& q, PointDescriptor point) {
    Mat3 j;
    for (int c = 0; c < 3; ++c) {
        Vec3 step = Vec3::Zero();
        step[c] = kJacobianStep;
        const Vec3 plus = point_position(geom, offset(q, step), point);
        const Vec3 minus = point_position(geom, offset(q, -step), point);
        j.col(c) = (plus - minus) / (2.0 * kJacobianStep);
    }
    return j;
}

Vec3 static_torques(const kin::ArmGeometry& geom, const SegmentInertia& inertia, const kin::JointAngles& q,
                    const Vec3& gravity) {
    inertia.validate();
    Vec3 tau = Vec3::Zero();
    for (const auto& [point, mass] : mass_points(inertia)) {
        if (mass == 0.0) continue;
        tau -= positional_jacobian(geom, q, point).transpose() * (mass * gravity);
    }
    return tau;
}

Vec3 inertial_torques(const kin::ArmGeometry& geom, const SegmentInertia& inertia, const kin::JointAngles& q,
                      const std::array<Vec3, 3>& point_accelerations) {
    inertia.validate();
    Vec3 tau = Vec3::Zero();
    const auto points = mass_points(inertia);
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& [point, mass] = points[k];
        if (mass == 0.0) continue;
        tau += positional_jacobian(geom, q, point).transpose() * (mass * point_accelerations[k]);
    }
    return tau;
}

Vec3 dynamic_torques(const kin::ArmGeometry& geom, const SegmentInertia& inertia, const kin::JointAngles& q,
                     const Vec3& qd, const Vec3& qdd, const Vec3& gravity) {
    std::array<Vec3, 3> accel;
    const auto points = mass_points(inertia);
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto point = points[k].first;
        const Mat3 j = positional_jacobian(geom, q, point);
        // (dJ/dt) qd as a directional difference of J along qd.
        const Mat3 jp = positional_jacobian(geom, offset(q, kJacobianStep * qd), point);
        const Mat3 jm = positional_jacobian(geom, offset(q, -kJacobianStep * qd), point);
        accel[k] = j * qdd + ((jp - jm) / (2.0 * kJacobianStep)) * qd;
    }
    return static_torques(geom, inertia, q, gravity) + inertial_torques(geom, inertia, q, accel);
}

TorqueSeries torque_series(const kin::ArmGeometry& geom, const SegmentInertia& inertia,
                           const kin::JointTrajectory& traj, const Vec3& gravity, bool inertial) {
    inertia.validate();
    TorqueSeries out;
    out.times = traj.times;
    out.tau.reserve(traj.size());
    for (const auto& q : traj.angles) out.tau.push_back(static_torques(geom, inertia, q, gravity));
    if (!inertial) return out;

    const std::size_t n = traj.size();
    std::array<std::vector<Vec3>, 3> paths;
    for (auto& p : paths) p.reserve(n);
    for (const auto& q : traj.angles) {
        const auto com = com_positions(geom, inertia, q);
        paths[0].push_back(com.upper_com);
        paths[1].push_back(com.fore_com);
        paths[2].push_back(com.payload_point);
    }
    std::array<std::vector<Vec3>, 3> accel;
    for (std::size_t k = 0; k < 3; ++k) accel[k] = differentiate(traj.times, std::span<const Vec3>(paths[k]), 2);
    for (std::size_t i = 0; i < n; ++i) {
        out.tau[i] += inertial_torques(geom, inertia, traj.angles[i], {accel[0][i], accel[1][i], accel[2][i]});
    }
    return out;
}

LoadProfile load_profile(const TorqueSeries& torques, const Vec3& tau_max, int joint) {
    if (joint < 1 || joint > 3) throw Error(ErrorKind::Parameter, "load joint must be 1, 2 or 3");
    const double limit = tau_max[joint - 1];
    if (!(limit > 0.0)) throw Error(ErrorKind::Parameter, "tau_max must be > 0 for the selected joint");
    LoadProfile out;
    out.times = torques.times;
    out.f.reserve(torques.size());
    for (const auto& tau : torques.tau) {
        const double f = std::abs(tau[joint - 1]) / limit;
        out.f.push_back(f);
        out.over_limit.push_back(f > 1.0);
    }
    return out;
}

LoadProfile direct_load_profile(std::span<const double> times, std::span<const double> force, double mvc_force) {
    if (!(mvc_force > 0.0)) throw Error(ErrorKind::Parameter, "mvc force must be > 0");
    if (times.size() != force.size()) throw Error(ErrorKind::Alignment, "direct load: size mismatch");
    LoadProfile out;
    out.times.assign(times.begin(), times.end());
    for (double v : force) {
        const double f = std::abs(v) / mvc_force;
        out.f.push_back(f);
        out.over_limit.push_back(f > 1.0);
    }
    return out;
}

void write_torque_csv(const std::filesystem::path& path, const TorqueSeries& series) {
    csv::NumericTable table;
    table.header = {"time", "tau1", "tau2", "tau3"};
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& t = series.tau[i];
        table.rows.push_back({series.times[i], t.x(), t.y(), t.z()});
    }
    csv::write_numeric(path, table);
}

TorqueSeries read_torque_csv(const std::filesystem::path& path) {
    const auto table = csv::read_numeric(path);
    const auto t = table.column("time");
    const auto c1 = table.column("tau1");
    const auto c2 = table.column("tau2");
    const auto c3 = table.column("tau3");
    TorqueSeries out;
    for (const auto& row : table.rows) {
        out.times.push_back(row[t]);
        out.tau.emplace_back(row[c1], row[c2], row[c3]);
    }
    return out;
}

void write_load_csv(const std::filesystem::path& path, const LoadProfile& load) {
    csv::Table table;
    table.header = {"time", "f", "over_limit"};
    for (std::size_t i = 0; i < load.size(); ++i) {
        table.rows.push_back(
            {csv::format_number(load.times[i]), csv::format_number(load.f[i]), load.over_limit[i] ? "1" : "0"});
    }
    csv::write_table(path, table);
}

LoadProfile read_load_csv(const std::filesystem::path& path) {
    const auto table = csv::read_numeric(path);
    const auto t = table.column("time");
    const auto f = table.column("f");
    const auto o = table.column("over_limit");
    LoadProfile out;
    for (const auto& row : table.rows) {
        out.times.push_back(row[t]);
        out.f.push_back(row[f]);
        out.over_limit.push_back(row[o] != 0.0);
    }
    return out;
}

}  // namespace ergo::dyn
