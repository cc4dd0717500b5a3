#include "ergo/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ergo/csv.hpp"
#include "ergo/error.hpp"

namespace ergo::synth {

namespace {

constexpr std::array<const char*, 3> kPrefixes{"S", "E", "W"};

}  // namespace

double AngleWave::at(double t) const {
    if (amplitude == 0.0) return offset;
    return offset + amplitude * std::sin(2.0 * EIGEN_PI * frequency * t + phase);
}

kin::JointAngles MotionSpec::angles_at(double t) const {
    kin::JointAngles q;
    q.theta1 = theta[0].at(t);
    q.theta2 = theta[1].at(t);
    q.theta3 = theta[2].at(t);
    return q;
}

std::size_t MotionSpec::frame_count() const {
    return static_cast<std::size_t>(std::floor(duration * rate + 1e-9)) + 1;
}

void MotionSpec::validate() const {
    if (!(d3 > 0.0) || !(d4 > 0.0)) throw Error(ErrorKind::Parameter, "synthetic: segment lengths must be > 0");
    if (!(rate > 0.0)) throw Error(ErrorKind::Parameter, "synthetic: rate must be > 0");
    if (!(duration >= 0.0)) throw Error(ErrorKind::Parameter, "synthetic: duration must be >= 0");
    if (markers_per_articulation < 2 || markers_per_articulation > 6 || markers_per_articulation % 2) {
        throw Error(ErrorKind::Parameter, "synthetic: markers_per_articulation must be 2, 4 or 6");
    }
    if (!(marker_offset > 0.0)) throw Error(ErrorKind::Parameter, "synthetic: marker_offset must be > 0");
    if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::Parameter, "synthetic: noise_sigma must be >= 0");
    kin::AxisMapping::parse(axis_mapping);
}

MotionSpec MotionSpec::from_json_text(const std::string& text) {
    MotionSpec spec;
    try {
        const auto j = nlohmann::json::parse(text);
        spec.d3 = j.value("d3", spec.d3);
        spec.d4 = j.value("d4", spec.d4);
        if (j.contains("theta")) {
            const auto& jt = j.at("theta");
            if (!jt.is_array() || jt.size() != 3) throw Error(ErrorKind::Format, "synthetic: theta needs 3 entries");
            for (std::size_t i = 0; i < 3; ++i) {
                if (jt[i].is_number()) {
                    spec.theta[i] = {jt[i].get<double>(), 0.0, 0.0, 0.0};
                } else {
                    spec.theta[i].offset = jt[i].value("offset", 0.0);
                    spec.theta[i].amplitude = jt[i].value("amplitude", 0.0);
                    spec.theta[i].frequency = jt[i].value("frequency", 0.0);
                    spec.theta[i].phase = jt[i].value("phase", 0.0);
                }
            }
        }
        if (j.contains("shoulder")) {
            const auto s = j.at("shoulder").get<std::array<double, 3>>();
            spec.shoulder = {s[0], s[1], s[2]};
        }
        if (j.contains("axis_mapping")) spec.axis_mapping = j.at("axis_mapping").get<std::array<std::string, 3>>();
        spec.rate = j.value("rate", spec.rate);
        spec.duration = j.value("duration", spec.duration);
        spec.markers_per_articulation = j.value("markers_per_articulation", spec.markers_per_articulation);
        spec.marker_offset = j.value("marker_offset", spec.marker_offset);
        spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
        spec.seed = j.value("seed", spec.seed);
        if (j.contains("units")) spec.units = mocap::parse_units(j.at("units").get<std::string>());
        if (j.contains("gaps")) {
            for (const auto& g : j.at("gaps")) {
                spec.gaps.push_back({g.at("marker").get<std::string>(), g.at("start").get<std::size_t>(),
                                     g.at("length").get<std::size_t>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("synthetic spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

MotionSpec MotionSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open motion spec " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::vector<std::string> SyntheticCapture::column_labels() const {
    std::vector<std::string> out;
    for (const auto& l : labels) {
        for (const char* axis : {".x", ".y", ".z"}) out.push_back(l + axis);
    }
    return out;
}

SyntheticCapture generate(const MotionSpec& spec) {
    spec.validate();
    const auto geom = kin::ArmGeometry::make(spec.d3, spec.d4);
    const Mat3 lab_from_model = kin::AxisMapping::parse(spec.axis_mapping).matrix().transpose();
    const double scale = spec.units == mocap::Units::Millimeters ? 1000.0 : 1.0;

    SyntheticCapture out;
    out.units = spec.units;
    const std::size_t pairs = spec.markers_per_articulation / 2;
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t m = 0; m < spec.markers_per_articulation; ++m) {
            const std::string label = kPrefixes[a] + std::to_string(m + 1);
            out.labels.push_back(label);
            out.tracker_map.members[a].push_back(label);
        }
    }
    for (const auto& gap : spec.gaps) {
        if (std::find(out.labels.begin(), out.labels.end(), gap.marker) == out.labels.end()) {
            throw Error(ErrorKind::Parameter, "synthetic: gap for unknown marker '" + gap.marker + "'");
        }
    }

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);

    const std::size_t n = spec.frame_count();
    out.times.reserve(n);
    out.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.rate;
        out.times.push_back(t);
        const auto fk = kin::forward_kinematics(geom, spec.angles_at(t));
        const std::array<Vec3, 3> joints{spec.shoulder, spec.shoulder + lab_from_model * fk.elbow,
                                         spec.shoulder + lab_from_model * fk.wrist};
        std::vector<double> row;
        row.reserve(out.labels.size() * 3);
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t p = 0; p < pairs; ++p) {
                // pairs straddle the joint along distinct lab axes
                Vec3 dir = Vec3::Zero();
                dir[static_cast<Eigen::Index>((a + p) % 3)] = spec.marker_offset;
                for (const double sign : {1.0, -1.0}) {
                    Vec3 pos = joints[a] + sign * dir;
                    if (spec.noise_sigma > 0.0) {
                        for (int c = 0; c < 3; ++c) pos[c] += noise(rng);
                    }
                    for (int c = 0; c < 3; ++c) row.push_back(pos[c] * scale);
                }
            }
        }
        out.values.push_back(std::move(row));
    }

    for (const auto& gap : spec.gaps) {
        const auto idx = static_cast<std::size_t>(
            std::find(out.labels.begin(), out.labels.end(), gap.marker) - out.labels.begin());
        for (std::size_t f = gap.start_frame; f < std::min(n, gap.start_frame + gap.length); ++f) {
            for (std::size_t c = 0; c < 3; ++c) out.values[f][idx * 3 + c] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return out;
}

void write_synthetic_csv(const std::filesystem::path& path, const SyntheticCapture& capture) {
    csv::Table table;
    table.header = {"Frame", "Time"};
    const auto cols = capture.column_labels();
    table.header.insert(table.header.end(), cols.begin(), cols.end());
    for (std::size_t i = 0; i < capture.times.size(); ++i) {
        std::vector<std::string> cells{std::to_string(i), csv::format_number(capture.times[i])};
        for (double v : capture.values[i]) cells.push_back(std::isnan(v) ? std::string{} : csv::format_number(v));
        table.rows.push_back(std::move(cells));
    }
    csv::write_table(path, table);
}

SyntheticCapture generate_synthetic(const MotionSpec& spec, const std::filesystem::path& out) {
    auto capture = generate(spec);
    write_synthetic_csv(out, capture);
    return capture;
}

}  // namespace ergo::synth
