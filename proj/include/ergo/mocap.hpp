#pragma once

// Capture CSV ingest: parsing, marker extraction, gap filling, smoothing,
// resampling and tracker-table averaging. Internal unit is meters.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ergo/types.hpp"

namespace ergo::mocap {

enum class Units { Millimeters, Meters };

Units parse_units(const std::string& text);
const char* to_string(Units units);

struct CaptureRow {
    long long frame = 0;
    double time = 0.0;
    std::vector<std::optional<double>> values;
};

/// Columns other than `Frame` and `Time`, with positions already in meters.
struct RawCapture {
    std::vector<std::string> column_labels;
    std::vector<CaptureRow> rows;
    Units source_units = Units::Millimeters;

    /// Marker labels M for which `M.x`, `M.y` and `M.z` columns all exist.
    std::vector<std::string> marker_labels() const;
};

struct Sample {
    double time = 0.0;
    std::optional<Vec3> position;
};

struct MarkerTrajectory {
    std::string label;
    std::vector<Sample> samples;
    /// Nominal sample rate in Hz. For raw extractions this is the mean rate.
    double rate = 0.0;

    std::size_t present_count() const;
};

enum class Articulation { Shoulder = 0, Elbow = 1, Wrist = 2 };
inline constexpr std::array<const char*, 3> kArticulationNames{"shoulder", "elbow", "wrist"};

struct TrackerMap {
    std::array<std::vector<std::string>, 3> members;

    const std::vector<std::string>& operator[](Articulation a) const {
        return members[static_cast<std::size_t>(a)];
    }

    /// Checks that every articulation has at least one member and that no
    /// label is shared between articulations.
    void validate() const;

    static TrackerMap from_json_text(const std::string& text);
    static TrackerMap load(const std::filesystem::path& path);
    std::string to_json_text() const;
};

struct ArticulationTrajectory {
    std::vector<double> times;
    std::vector<Vec3> shoulder;
    std::vector<Vec3> elbow;
    std::vector<Vec3> wrist;
    double rate = 100.0;

    /// Frames where a segment length leaves +-5% of its median.
    std::vector<std::size_t> rigidity_violations;
    std::vector<std::string> warnings;

    std::size_t size() const { return times.size(); }
    const std::vector<Vec3>& series(Articulation a) const;

    /// Recomputes `rigidity_violations` from the current positions.
    void check_rigidity(double tolerance = 0.05);
};

struct GapSpan {
    std::string label;
    std::size_t first = 0;  // sample index, inclusive
    std::size_t last = 0;   // sample index, inclusive
    bool at_boundary = false;
};

struct FillResult {
    MarkerTrajectory trajectory;
    std::vector<GapSpan> residual_gaps;
};

RawCapture parse_capture_csv(const std::filesystem::path& path, Units units);

/// Writes `capture` in the canonical layout, converting meters to `units`.
void write_capture_csv(const std::filesystem::path& path, const RawCapture& capture, Units units);

MarkerTrajectory extract_marker(const RawCapture& capture, const std::string& label);

FillResult fill_gaps(const MarkerTrajectory& traj, std::size_t max_gap);

MarkerTrajectory smooth(const MarkerTrajectory& traj, std::size_t window);

MarkerTrajectory resample(const MarkerTrajectory& traj, double rate);

ArticulationTrajectory average_tracker_table(const std::vector<MarkerTrajectory>& markers,
                                             const TrackerMap& map);

struct IngestOptions {
    std::size_t max_gap = 10;
    std::size_t smoothing_window = 5;
    double rate = 100.0;
};

struct IngestResult {
    ArticulationTrajectory trajectory;
    std::vector<GapSpan> residual_gaps;
};

/// Full chain for one capture: extract every mapped marker, fill short gaps,
/// trim to the span where all markers are present, smooth, resample and
/// average. Interior gaps longer than `max_gap` abort with a sequence error.
IngestResult ingest(const RawCapture& capture, const TrackerMap& map, const IngestOptions& options);

void write_articulation_csv(const std::filesystem::path& path, const ArticulationTrajectory& traj);
ArticulationTrajectory read_articulation_csv(const std::filesystem::path& path);

}  // namespace ergo::mocap
