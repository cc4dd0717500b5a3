#pragma once

// Forward-kinematics fixture generator: writes capture CSVs for a known
// joint motion so every downstream stage can be checked against truth.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "ergo/kinematics.hpp"
#include "ergo/mocap.hpp"

namespace ergo::synth {

/// theta(t) = offset + amplitude * sin(2 pi frequency t + phase)
struct AngleWave {
    double offset = 0.0;
    double amplitude = 0.0;
    double frequency = 0.0;  // Hz
    double phase = 0.0;

    double at(double t) const;
};

struct InjectedGap {
    std::string marker;
    std::size_t start_frame = 0;
    std::size_t length = 0;
};

struct MotionSpec {
    double d3 = 0.3;
    double d4 = 0.25;
    std::array<AngleWave, 3> theta{};
    Vec3 shoulder = Vec3::Zero();  // lab frame, meters
    std::array<std::string, 3> axis_mapping{"+x", "+y", "+z"};
    double rate = 100.0;
    double duration = 10.0;
    std::size_t markers_per_articulation = 2;
    double marker_offset = 0.02;
    double noise_sigma = 0.0;  // meters
    unsigned long long seed = 1;
    mocap::Units units = mocap::Units::Millimeters;
    std::vector<InjectedGap> gaps;

    kin::JointAngles angles_at(double t) const;
    std::size_t frame_count() const;
    void validate() const;

    static MotionSpec from_json_text(const std::string& text);
    static MotionSpec load(const std::filesystem::path& path);
};

struct SyntheticCapture {
    std::vector<std::string> labels;  // marker labels, e.g. S1, S2, E1, ...
    std::vector<double> times;
    /// values[row][column] in the output units; column order follows
    /// labels x/y/z. NaN marks an injected gap.
    std::vector<std::vector<double>> values;
    mocap::TrackerMap tracker_map;
    mocap::Units units = mocap::Units::Millimeters;

    /// Column labels in CSV order ("S1.x", "S1.y", ...).
    std::vector<std::string> column_labels() const;
};

SyntheticCapture generate(const MotionSpec& spec);

/// Generates and writes the capture CSV. Returns the generated data.
SyntheticCapture generate_synthetic(const MotionSpec& spec, const std::filesystem::path& out);

void write_synthetic_csv(const std::filesystem::path& path, const SyntheticCapture& capture);

}  // namespace ergo::synth
