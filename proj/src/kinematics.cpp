#include "ergo/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ergo/csv.hpp"
#include "ergo/error.hpp"

namespace ergo::kin {

namespace {

constexpr double kPi = EIGEN_PI;
constexpr double kTwoPi = 2.0 * EIGEN_PI;

// cos/sin that return exact 0 and +-1 at quarter turns, so constant twist
// angles such as +-pi/2 produce exact axis permutations.
std::pair<double, double> cos_sin_exact(double angle) {
    const double quarters = angle / (kPi / 2);
    const double rounded = std::round(quarters);
    if (std::abs(quarters - rounded) < 1e-15) {
        switch (((static_cast<long long>(rounded) % 4) + 4) % 4) {
            case 0: return {1.0, 0.0};
            case 1: return {0.0, 1.0};
            case 2: return {-1.0, 0.0};
            default: return {0.0, -1.0};
        }
    }
    return {std::cos(angle), std::sin(angle)};
}

Mat3 rot_x(double c, double s) {
    Mat3 m;
    m << 1, 0, 0, 0, c, -s, 0, s, c;
    return m;
}

Mat3 rot_z(double c, double s) {
    Mat3 m;
    m << c, -s, 0, s, c, 0, 0, 0, 1;
    return m;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double unwrap_near(double value, double reference) {
    return value + kTwoPi * std::round((reference - value) / kTwoPi);
}

int axis_index(char c) {
    switch (c) {
        case 'x': case 'X': return 0;
        case 'y': case 'Y': return 1;
        case 'z': case 'Z': return 2;
        default: return -1;
    }
}

}  // namespace

bool RigidTransform::is_valid(double tol) const {
    const Mat3 gram = rotation.transpose() * rotation;
    return (gram - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol && translation.allFinite();
}

AxisMapping AxisMapping::parse(const std::array<std::string, 3>& spec) {
    AxisMapping m;
    std::array<bool, 3> used{};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& s = spec[i];
        if (s.size() != 2 || (s[0] != '+' && s[0] != '-') || axis_index(s[1]) < 0) {
            throw Error(ErrorKind::Parameter, "axis mapping entry '" + s + "' must look like +x or -z");
        }
        m.sign[i] = s[0] == '+' ? 1 : -1;
        m.source[i] = axis_index(s[1]);
        if (used[static_cast<std::size_t>(m.source[i])]) {
            throw Error(ErrorKind::Parameter, "axis mapping repeats lab axis '" + std::string(1, s[1]) + "'");
        }
        used[static_cast<std::size_t>(m.source[i])] = true;
    }
    if (m.matrix().determinant() < 0) {
        throw Error(ErrorKind::Parameter, "axis mapping must be a proper rotation (determinant +1)");
    }
    return m;
}

std::array<std::string, 3> AxisMapping::to_strings() const {
    std::array<std::string, 3> out;
    for (std::size_t i = 0; i < 3; ++i) {
        out[i] = std::string(1, sign[i] > 0 ? '+' : '-') + "xyz"[source[i]];
    }
    return out;
}

Mat3 AxisMapping::matrix() const {
    Mat3 m = Mat3::Zero();
    for (std::size_t i = 0; i < 3; ++i) m(static_cast<Eigen::Index>(i), source[i]) = sign[i];
    return m;
}

ArmGeometry ArmGeometry::make(double d3, double d4) {
    ArmGeometry g;
    g.d3 = d3;
    g.d4 = d4;
    g.dh_rows = {DHRow{0, kPi / 2, 0.0, 0.0, true, 0.0},
                 DHRow{0, -kPi / 2, 0.0, 0.0, true, 0.0},
                 DHRow{0, 0.0, d3, 0.0, true, 0.0},
                 DHRow{0, 0.0, d4, 0.0, false, 0.0}};
    g.validate();
    return g;
}

void ArmGeometry::validate() const {
    if (!(d3 > 0.0) || !(d4 > 0.0) || !std::isfinite(d3) || !std::isfinite(d4)) {
        throw Error(ErrorKind::DegenerateGeometry, "segment lengths must be positive and finite");
    }
    const std::array<double, 4> alpha{kPi / 2, -kPi / 2, 0.0, 0.0};
    const std::array<double, 4> d{0.0, 0.0, d3, d4};
    for (std::size_t j = 0; j < 4; ++j) {
        const auto& row = dh_rows[j];
        if (row.sigma != 0 || row.r != 0.0 || row.alpha != alpha[j] || row.d != d[j] ||
            row.variable != (j < 3) || (!row.variable && row.theta != 0.0)) {
            throw Error(ErrorKind::Parameter, "DH row " + std::to_string(j + 1) + " does not match the arm model");
        }
    }
    if (!base_transform.is_valid(1e-12)) {
        throw Error(ErrorKind::Parameter, "base transform rotation is not a proper rotation");
    }
}

bool ArmGeometry::within_limits(const JointAngles& q) const {
    for (std::size_t i = 0; i < 3; ++i) {
        if (q[i] < joint_limits.range[i].first || q[i] > joint_limits.range[i].second) return false;
    }
    return true;
}

std::string ArmGeometry::to_json_text() const {
    nlohmann::ordered_json j;
    j["d3"] = d3;
    j["d4"] = d4;
    j["axis_mapping"] = axis_mapping.to_strings();
    // Lab-frame position of the shoulder-frame origin.
    const Vec3 origin = -(base_transform.rotation.transpose() * base_transform.translation);
    j["shoulder_origin"] = {origin.x(), origin.y(), origin.z()};
    auto& limits = j["joint_limits"] = nlohmann::ordered_json::array();
    for (const auto& [lo, hi] : joint_limits.range) limits.push_back({lo, hi});
    return j.dump(2) + "\n";
}

ArmGeometry ArmGeometry::from_json_text(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        auto g = make(j.at("d3").get<double>(), j.at("d4").get<double>());
        g.axis_mapping = AxisMapping::parse(j.at("axis_mapping").get<std::array<std::string, 3>>());
        const auto origin = j.at("shoulder_origin").get<std::array<double, 3>>();
        const Mat3 r = g.axis_mapping.matrix();
        g.base_transform = {r, -(r * Vec3(origin[0], origin[1], origin[2]))};
        if (j.contains("joint_limits")) {
            const auto lim = j.at("joint_limits").get<std::vector<std::array<double, 2>>>();
            if (lim.size() != 3) throw Error(ErrorKind::Format, "geometry: joint_limits needs three entries");
            for (std::size_t i = 0; i < 3; ++i) g.joint_limits.range[i] = {lim[i][0], lim[i][1]};
        }
        g.validate();
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("geometry: ") + e.what());
    }
}

void ArmGeometry::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << to_json_text();
}

ArmGeometry ArmGeometry::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open geometry " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

RigidTransform dh_transform(const DHRow& row, double theta) {
    const auto [ca, sa] = cos_sin_exact(row.alpha);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const Mat3 rx = rot_x(ca, sa);
    // Rot(x,alpha) Trans(x,d) Rot(z,theta) Trans(z,r)
    RigidTransform t;
    t.rotation = rx * rot_z(ct, st);
    t.translation = Vec3(row.d, 0.0, 0.0) + rx * Vec3(0.0, 0.0, row.r);
    return t;
}

FkResult forward_kinematics(const ArmGeometry& geom, const JointAngles& q) {
    FkResult out;
    RigidTransform acc;
    for (std::size_t j = 0; j < 4; ++j) {
        const auto& row = geom.dh_rows[j];
        acc = acc * dh_transform(row, row.variable ? q[j] : row.theta);
        out.frames[j] = acc;
    }
    out.elbow = out.frames[2].translation;
    out.wrist = out.frames[3].translation;
    return out;
}

ArmGeometry calibrate_geometry(const mocap::ArticulationTrajectory& traj, const AxisMapping& mapping,
                               const JointLimits& limits) {
    const std::size_t n = traj.size();
    if (n == 0) throw Error(ErrorKind::InsufficientData, "calibrate_geometry: empty trajectory");
    std::vector<double> upper(n), fore(n);
    Vec3 origin = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        upper[i] = (traj.elbow[i] - traj.shoulder[i]).norm();
        fore[i] = (traj.wrist[i] - traj.elbow[i]).norm();
        origin += traj.shoulder[i];
    }
    origin /= static_cast<double>(n);
    const double d3 = median(upper);
    const double d4 = median(fore);
    if (!(d3 > 0.0) || !(d4 > 0.0)) {
        throw Error(ErrorKind::DegenerateGeometry, "calibrate_geometry: zero-length arm segment");
    }
    auto geom = ArmGeometry::make(d3, d4);
    geom.axis_mapping = mapping;
    const Mat3 r = mapping.matrix();
    geom.base_transform = {r, -(r * origin)};
    geom.joint_limits = limits;
    geom.validate();
    return geom;
}

JointAngles inverse_kinematics_frame(const ArmGeometry& geom, const Vec3& elbow, const Vec3& wrist,
                                     double theta1_hold) {
    const double upper = elbow.norm();
    const Vec3 segment = wrist - elbow;
    const double fore = segment.norm();
    if (!(upper > 0.0) || !(fore > 0.0) || !elbow.allFinite() || !wrist.allFinite()) {
        throw Error(ErrorKind::DegenerateInput, "inverse kinematics: zero-length or non-finite segment");
    }
    const double mis_upper = std::abs(upper - geom.d3) / geom.d3;
    const double mis_fore = std::abs(fore - geom.d4) / geom.d4;
    if (mis_upper > kReachTolerance || mis_fore > kReachTolerance) {
        std::ostringstream msg;
        msg << "inverse kinematics: segment lengths (" << upper << ", " << fore << ") differ from calibrated ("
            << geom.d3 << ", " << geom.d4 << ") by more than 5%";
        throw Error(ErrorKind::DegenerateInput, msg.str());
    }

    JointAngles q;
    q.reprojected = mis_upper > 1e-9 || mis_fore > 1e-9;
    // Radial re-projection onto the calibrated lengths only rescales; the
    // angles depend on the unit directions alone.
    const Vec3 u = elbow / upper;
    const Vec3 v = segment / fore;

    const double horizontal = std::hypot(u.x(), u.z());
    q.theta2 = std::atan2(u.y(), horizontal);
    q.singular = horizontal < kSingularCos;
    q.theta1 = q.singular ? theta1_hold : std::atan2(u.z(), u.x());

    const auto frame2 = dh_transform(geom.dh_rows[0], q.theta1) * dh_transform(geom.dh_rows[1], q.theta2);
    const Vec3 z2 = frame2.rotation.col(2);
    q.theta3 = std::atan2(u.cross(v).dot(z2), u.dot(v));
    q.out_of_limits = !geom.within_limits(q);
    return q;
}

std::size_t JointTrajectory::singular_count() const {
    return static_cast<std::size_t>(
        std::count_if(angles.begin(), angles.end(), [](const JointAngles& q) { return q.singular; }));
}

JointTrajectory solve_trajectory(const ArmGeometry& geom, const mocap::ArticulationTrajectory& traj) {
    geom.validate();
    JointTrajectory out;
    out.times = traj.times;
    out.angles.reserve(traj.size());
    const Mat3& rot = geom.base_transform.rotation;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        // Shoulder-frame origin follows the measured shoulder each frame.
        const Vec3 elbow = rot * (traj.elbow[i] - traj.shoulder[i]);
        const Vec3 wrist = rot * (traj.wrist[i] - traj.shoulder[i]);
        const double hold = out.angles.empty() ? 0.0 : out.angles.back().theta1;
        JointAngles q;
        try {
            q = inverse_kinematics_frame(geom, elbow, wrist, hold);
        } catch (const Error& e) {
            throw Error(e.kind(), "frame " + std::to_string(i) + ": " + e.what());
        }
        if (!out.angles.empty()) {
            const auto& prev = out.angles.back();
            if (!q.singular) q.theta1 = unwrap_near(q.theta1, prev.theta1);
            q.theta2 = unwrap_near(q.theta2, prev.theta2);
            q.theta3 = unwrap_near(q.theta3, prev.theta3);
        }
        out.angles.push_back(q);
    }
    return out;
}

void write_joint_csv(const std::filesystem::path& path, const JointTrajectory& traj) {
    csv::Table table;
    table.header = {"time", "theta1", "theta2", "theta3", "singular"};
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& q = traj.angles[i];
        table.rows.push_back({csv::format_number(traj.times[i]), csv::format_number(q.theta1),
                              csv::format_number(q.theta2), csv::format_number(q.theta3),
                              q.singular ? "1" : "0"});
    }
    csv::write_table(path, table);
}

JointTrajectory read_joint_csv(const std::filesystem::path& path) {
    const auto table = csv::read_numeric(path);
    const auto t = table.column("time");
    const auto a1 = table.column("theta1");
    const auto a2 = table.column("theta2");
    const auto a3 = table.column("theta3");
    const auto sg = table.column("singular");
    JointTrajectory out;
    for (const auto& row : table.rows) {
        if (row[sg] != 0.0 && row[sg] != 1.0) {
            throw Error(ErrorKind::Format, path.string() + ": singular must be 0 or 1");
        }
        out.times.push_back(row[t]);
        JointAngles q;
        q.theta1 = row[a1];
        q.theta2 = row[a2];
        q.theta3 = row[a3];
        q.singular = row[sg] == 1.0;
        out.angles.push_back(q);
    }
    for (std::size_t i = 1; i < out.times.size(); ++i) {
        if (!(out.times[i] > out.times[i - 1])) {
            throw Error(ErrorKind::Sequence, path.string() + ": time not strictly increasing");
        }
    }
    return out;
}

}  // namespace ergo::kin
