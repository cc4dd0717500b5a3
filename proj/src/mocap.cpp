#include "ergo/mocap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ergo/csv.hpp"
#include "ergo/error.hpp"

namespace ergo::mocap {

namespace {

constexpr double kGridTolerance = 1e-9;

double unit_scale(Units units) { return units == Units::Millimeters ? 1000.0 : 1.0; }

std::optional<std::size_t> find_label(const std::vector<std::string>& labels, const std::string& name) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == name) return i;
    }
    return std::nullopt;
}

double mean_rate(const std::vector<Sample>& samples) {
    if (samples.size() < 2) return 0.0;
    const double span = samples.back().time - samples.front().time;
    return span > 0.0 ? static_cast<double>(samples.size() - 1) / span : 0.0;
}

void require_no_absent(const MarkerTrajectory& traj, const char* op) {
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        if (!traj.samples[i].position) {
            throw Error(ErrorKind::Ordering, std::string(op) + ": marker '" + traj.label +
                                                 "' has an absent sample at index " +
                                                 std::to_string(i) + "; run fill_gaps first");
        }
    }
}

std::vector<Vec3> positions_of(const MarkerTrajectory& traj) {
    std::vector<Vec3> out;
    out.reserve(traj.samples.size());
    for (const auto& s : traj.samples) out.push_back(*s.position);
    return out;
}

// Centered moving average whose half-width shrinks near the ends so the
// window always stays symmetric about the sample.
std::vector<Vec3> centered_average(const std::vector<Vec3>& in, std::size_t half) {
    const std::size_t n = in.size();
    std::vector<Vec3> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t h = std::min({half, i, n - 1 - i});
        Vec3 sum = Vec3::Zero();
        for (std::size_t j = i - h; j <= i + h; ++j) sum += in[j];
        out[i] = sum / static_cast<double>(2 * h + 1);
    }
    return out;
}

// Sum of values in ascending order so the mean does not depend on input order.
double order_free_mean(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

Units parse_units(const std::string& text) {
    if (text == "millimeters" || text == "mm") return Units::Millimeters;
    if (text == "meters" || text == "m") return Units::Meters;
    throw Error(ErrorKind::Parameter, "unknown units '" + text + "'");
}

const char* to_string(Units units) { return units == Units::Millimeters ? "millimeters" : "meters"; }

std::vector<std::string> RawCapture::marker_labels() const {
    std::vector<std::string> out;
    for (const auto& label : column_labels) {
        if (label.size() > 2 && label.compare(label.size() - 2, 2, ".x") == 0) {
            const auto base = label.substr(0, label.size() - 2);
            if (find_label(column_labels, base + ".y") && find_label(column_labels, base + ".z")) {
                out.push_back(base);
            }
        }
    }
    return out;
}

std::size_t MarkerTrajectory::present_count() const {
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(),
                                                  [](const Sample& s) { return s.position.has_value(); }));
}

void TrackerMap::validate() const {
    std::set<std::string> seen;
    for (std::size_t a = 0; a < members.size(); ++a) {
        if (members[a].empty()) {
            throw Error(ErrorKind::Parameter,
                        std::string("tracker map: articulation '") + kArticulationNames[a] + "' has no markers");
        }
        for (const auto& label : members[a]) {
            if (!seen.insert(label).second) {
                throw Error(ErrorKind::Parameter,
                            "tracker map: marker '" + label + "' assigned to more than one articulation");
            }
        }
    }
}

TrackerMap TrackerMap::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("tracker map: ") + e.what());
    }
    TrackerMap map;
    for (std::size_t a = 0; a < kArticulationNames.size(); ++a) {
        const char* name = kArticulationNames[a];
        if (!j.contains(name)) {
            throw Error(ErrorKind::Format, std::string("tracker map: missing articulation '") + name + "'");
        }
        try {
            map.members[a] = j.at(name).get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorKind::Format, std::string("tracker map: '") + name + "' must be a list of labels");
        }
    }
    map.validate();
    return map;
}

TrackerMap TrackerMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open tracker map " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string TrackerMap::to_json_text() const {
    nlohmann::ordered_json j;
    for (std::size_t a = 0; a < members.size(); ++a) j[kArticulationNames[a]] = members[a];
    return j.dump(2) + "\n";
}

const std::vector<Vec3>& ArticulationTrajectory::series(Articulation a) const {
    switch (a) {
        case Articulation::Shoulder: return shoulder;
        case Articulation::Elbow: return elbow;
        case Articulation::Wrist: return wrist;
    }
    return shoulder;
}

void ArticulationTrajectory::check_rigidity(double tolerance) {
    rigidity_violations.clear();
    const std::size_t n = size();
    std::vector<double> upper(n), fore(n);
    for (std::size_t i = 0; i < n; ++i) {
        upper[i] = (elbow[i] - shoulder[i]).norm();
        fore[i] = (wrist[i] - elbow[i]).norm();
    }
    const double mu = median(upper);
    const double mf = median(fore);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(upper[i] - mu) > tolerance * mu || std::abs(fore[i] - mf) > tolerance * mf) {
            rigidity_violations.push_back(i);
        }
    }
}

RawCapture parse_capture_csv(const std::filesystem::path& path, Units units) {
    const auto table = csv::read_table(path);
    RawCapture capture;
    capture.source_units = units;

    const auto frame_col = find_label(table.header, "Frame");
    const auto time_col = find_label(table.header, "Time");
    if (!frame_col || !time_col) {
        throw Error(ErrorKind::Format, path.string() + ": header must contain 'Frame' and 'Time' columns");
    }
    std::vector<std::size_t> data_cols;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == *frame_col || c == *time_col) continue;
        capture.column_labels.push_back(table.header[c]);
        data_cols.push_back(c);
    }

    const double scale = unit_scale(units);
    capture.rows.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const auto line = std::to_string(table.line_numbers[r]);
        CaptureRow row;
        std::optional<double> frame;
        std::optional<double> time;
        try {
            frame = csv::parse_number(cells[*frame_col]);
            time = csv::parse_number(cells[*time_col]);
        } catch (const Error& e) {
            throw Error(ErrorKind::Format, path.string() + ": line " + line + ": " + e.what());
        }
        if (!frame || !time || *frame != std::floor(*frame)) {
            throw Error(ErrorKind::Format, path.string() + ": line " + line + ": missing or invalid Frame/Time");
        }
        row.frame = static_cast<long long>(*frame);
        row.time = *time;
        if (!capture.rows.empty()) {
            const auto& prev = capture.rows.back();
            if (!(row.time > prev.time)) {
                throw Error(ErrorKind::Sequence, path.string() + ": line " + line + ": time not strictly increasing");
            }
            if (row.frame <= prev.frame) {
                throw Error(ErrorKind::Sequence, path.string() + ": line " + line + ": frame not strictly increasing");
            }
        }
        row.values.reserve(data_cols.size());
        for (auto c : data_cols) {
            std::optional<double> v;
            try {
                v = csv::parse_number(cells[c]);
            } catch (const Error& e) {
                throw Error(ErrorKind::Format, path.string() + ": line " + line + ": " + e.what());
            }
            if (v) {
                if (!std::isfinite(*v)) {
                    throw Error(ErrorKind::Format, path.string() + ": line " + line + ": non-finite value");
                }
                *v /= scale;
            }
            row.values.push_back(v);
        }
        capture.rows.push_back(std::move(row));
    }
    return capture;
}

void write_capture_csv(const std::filesystem::path& path, const RawCapture& capture, Units units) {
    const double scale = unit_scale(units);
    csv::Table table;
    table.header = {"Frame", "Time"};
    table.header.insert(table.header.end(), capture.column_labels.begin(), capture.column_labels.end());
    for (const auto& row : capture.rows) {
        std::vector<std::string> cells;
        cells.reserve(table.header.size());
        cells.push_back(std::to_string(row.frame));
        cells.push_back(csv::format_number(row.time));
        for (const auto& v : row.values) cells.push_back(v ? csv::format_number(*v * scale) : std::string{});
        table.rows.push_back(std::move(cells));
    }
    csv::write_table(path, table);
}

MarkerTrajectory extract_marker(const RawCapture& capture, const std::string& label) {
    const auto cx = find_label(capture.column_labels, label + ".x");
    const auto cy = find_label(capture.column_labels, label + ".y");
    const auto cz = find_label(capture.column_labels, label + ".z");
    if (!cx || !cy || !cz) {
        std::string available;
        for (const auto& m : capture.marker_labels()) available += (available.empty() ? "" : ", ") + m;
        throw Error(ErrorKind::Lookup, "marker '" + label + "' not found; available: " + available);
    }
    MarkerTrajectory traj;
    traj.label = label;
    traj.samples.reserve(capture.rows.size());
    for (const auto& row : capture.rows) {
        Sample s{row.time, std::nullopt};
        const auto& x = row.values[*cx];
        const auto& y = row.values[*cy];
        const auto& z = row.values[*cz];
        if (x && y && z) s.position = Vec3(*x, *y, *z);
        traj.samples.push_back(s);
    }
    traj.rate = mean_rate(traj.samples);
    return traj;
}

FillResult fill_gaps(const MarkerTrajectory& traj, std::size_t max_gap) {
    if (traj.present_count() < 2) {
        throw Error(ErrorKind::InsufficientData,
                    "fill_gaps: marker '" + traj.label + "' has fewer than 2 present samples");
    }
    FillResult result{traj, {}};
    auto& samples = result.trajectory.samples;
    const std::size_t n = samples.size();
    std::size_t i = 0;
    while (i < n) {
        if (samples[i].position) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !samples[j].position) ++j;
        // absent run is [i, j)
        const bool bounded = i > 0 && j < n;
        const std::size_t length = j - i;
        if (bounded && length <= max_gap) {
            const auto& a = samples[i - 1];
            const auto& b = samples[j];
            const double span = b.time - a.time;
            for (std::size_t k = i; k < j; ++k) {
                const double w = (samples[k].time - a.time) / span;
                samples[k].position = *a.position + w * (*b.position - *a.position);
            }
        } else {
            result.residual_gaps.push_back({traj.label, i, j - 1, !bounded});
        }
        i = j;
    }
    return result;
}

MarkerTrajectory smooth(const MarkerTrajectory& traj, std::size_t window) {
    if (window == 0 || window % 2 == 0) {
        throw Error(ErrorKind::Parameter, "smooth: window must be odd and >= 1, got " + std::to_string(window));
    }
    require_no_absent(traj, "smooth");
    if (window == 1) return traj;

    const std::size_t half = window / 2;
    auto values = centered_average(positions_of(traj), half);
    std::reverse(values.begin(), values.end());
    values = centered_average(values, half);
    std::reverse(values.begin(), values.end());

    MarkerTrajectory out = traj;
    for (std::size_t i = 0; i < values.size(); ++i) out.samples[i].position = values[i];
    return out;
}

MarkerTrajectory resample(const MarkerTrajectory& traj, double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw Error(ErrorKind::Parameter, "resample: rate must be > 0");
    }
    require_no_absent(traj, "resample");
    if (traj.samples.empty()) throw Error(ErrorKind::InsufficientData, "resample: empty trajectory");
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        if (!(traj.samples[i].time > traj.samples[i - 1].time)) {
            throw Error(ErrorKind::Sequence, "resample: times not strictly increasing");
        }
    }

    const double t0 = traj.samples.front().time;
    const double t1 = traj.samples.back().time;
    const auto count = static_cast<std::size_t>(std::floor((t1 - t0) * rate + 1e-6)) + 1;

    MarkerTrajectory out;
    out.label = traj.label;
    out.rate = rate;
    out.samples.reserve(count);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = t0 + static_cast<double>(i) / rate;
        while (seg + 2 < traj.samples.size() && traj.samples[seg + 1].time <= t) ++seg;
        const auto& a = traj.samples[seg];
        if (traj.samples.size() == 1) {
            out.samples.push_back({t, a.position});
            continue;
        }
        const auto& b = traj.samples[seg + 1];
        Vec3 p;
        if (t == a.time) {
            p = *a.position;
        } else if (t == b.time) {
            p = *b.position;
        } else {
            const double w = (t - a.time) / (b.time - a.time);
            p = *a.position + w * (*b.position - *a.position);
        }
        out.samples.push_back({t, p});
    }
    return out;
}

ArticulationTrajectory average_tracker_table(const std::vector<MarkerTrajectory>& markers,
                                             const TrackerMap& map) {
    map.validate();
    auto find_marker = [&markers](const std::string& label) -> const MarkerTrajectory& {
        for (const auto& m : markers) {
            if (m.label == label) return m;
        }
        throw Error(ErrorKind::Lookup, "tracker table: marker '" + label + "' listed in map but not supplied");
    };

    ArticulationTrajectory out;
    const MarkerTrajectory* reference = nullptr;
    std::array<std::vector<const MarkerTrajectory*>, 3> groups;
    for (std::size_t a = 0; a < 3; ++a) {
        for (const auto& label : map.members[a]) {
            const auto& m = find_marker(label);
            require_no_absent(m, "average_tracker_table");
            if (!reference) reference = &m;
            if (m.samples.size() != reference->samples.size()) {
                throw Error(ErrorKind::Alignment, "tracker table: marker '" + m.label + "' has " +
                                                      std::to_string(m.samples.size()) + " samples, expected " +
                                                      std::to_string(reference->samples.size()));
            }
            for (std::size_t i = 0; i < m.samples.size(); ++i) {
                if (std::abs(m.samples[i].time - reference->samples[i].time) > kGridTolerance) {
                    throw Error(ErrorKind::Alignment,
                                "tracker table: marker '" + m.label + "' is on a different time grid");
                }
            }
            groups[a].push_back(&m);
        }
        if (map.members[a].size() < 2) {
            out.warnings.push_back(std::string("articulation '") + kArticulationNames[a] +
                                   "' has fewer than two markers");
        }
    }

    const std::size_t n = reference->samples.size();
    out.rate = reference->rate;
    out.times.reserve(n);
    for (const auto& s : reference->samples) out.times.push_back(s.time);
    std::array<std::vector<Vec3>*, 3> targets{&out.shoulder, &out.elbow, &out.wrist};
    std::vector<double> scratch;
    for (std::size_t a = 0; a < 3; ++a) {
        targets[a]->resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vec3 mean;
            for (int c = 0; c < 3; ++c) {
                scratch.clear();
                for (const auto* m : groups[a]) scratch.push_back((*m->samples[i].position)[c]);
                mean[c] = order_free_mean(scratch);
            }
            (*targets[a])[i] = mean;
        }
    }
    out.check_rigidity();
    return out;
}

IngestResult ingest(const RawCapture& capture, const TrackerMap& map, const IngestOptions& options) {
    map.validate();
    IngestResult result;
    std::vector<MarkerTrajectory> filled;
    for (const auto& group : map.members) {
        for (const auto& label : group) {
            auto fr = fill_gaps(extract_marker(capture, label), options.max_gap);
            result.residual_gaps.insert(result.residual_gaps.end(), fr.residual_gaps.begin(),
                                        fr.residual_gaps.end());
            filled.push_back(std::move(fr.trajectory));
        }
    }

    for (const auto& gap : result.residual_gaps) {
        if (!gap.at_boundary) {
            throw Error(ErrorKind::Sequence, "marker '" + gap.label + "' has an unfilled gap at frames " +
                                                 std::to_string(gap.first) + ".." + std::to_string(gap.last) +
                                                 " (longer than max_gap)");
        }
    }

    // Leading and trailing gaps are trimmed to the span covered by every marker.
    std::size_t first = 0;
    std::size_t last = capture.rows.size() - 1;
    for (const auto& m : filled) {
        std::size_t f = 0;
        while (!m.samples[f].position) ++f;
        std::size_t l = m.samples.size() - 1;
        while (!m.samples[l].position) --l;
        first = std::max(first, f);
        last = std::min(last, l);
    }
    if (last <= first) throw Error(ErrorKind::InsufficientData, "markers share no common present span");

    std::vector<MarkerTrajectory> processed;
    processed.reserve(filled.size());
    for (auto& m : filled) {
        MarkerTrajectory trimmed;
        trimmed.label = m.label;
        trimmed.samples.assign(m.samples.begin() + static_cast<std::ptrdiff_t>(first),
                               m.samples.begin() + static_cast<std::ptrdiff_t>(last) + 1);
        trimmed.rate = mean_rate(trimmed.samples);
        processed.push_back(resample(smooth(trimmed, options.smoothing_window), options.rate));
    }
    result.trajectory = average_tracker_table(processed, map);
    return result;
}

void write_articulation_csv(const std::filesystem::path& path, const ArticulationTrajectory& traj) {
    csv::NumericTable table;
    table.header = {"time"};
    for (const char* name : kArticulationNames) {
        for (const char* axis : {".x", ".y", ".z"}) table.header.push_back(std::string(name) + axis);
    }
    for (std::size_t i = 0; i < traj.size(); ++i) {
        std::vector<double> row{traj.times[i]};
        for (const auto* series : {&traj.shoulder, &traj.elbow, &traj.wrist}) {
            const auto& p = (*series)[i];
            row.insert(row.end(), {p.x(), p.y(), p.z()});
        }
        table.rows.push_back(std::move(row));
    }
    csv::write_numeric(path, table);
}

ArticulationTrajectory read_articulation_csv(const std::filesystem::path& path) {
    const auto table = csv::read_numeric(path);
    ArticulationTrajectory traj;
    const auto tc = table.column("time");
    std::array<std::size_t, 3> base{};
    for (std::size_t a = 0; a < 3; ++a) base[a] = table.column(std::string(kArticulationNames[a]) + ".x");
    for (std::size_t a = 0; a < 3; ++a) {
        const std::string name = kArticulationNames[a];
        if (table.column(name + ".y") != base[a] + 1 || table.column(name + ".z") != base[a] + 2) {
            throw Error(ErrorKind::Format, path.string() + ": columns for '" + name + "' must be x,y,z in order");
        }
    }
    for (const auto& row : table.rows) {
        traj.times.push_back(row[tc]);
        traj.shoulder.emplace_back(row[base[0]], row[base[0] + 1], row[base[0] + 2]);
        traj.elbow.emplace_back(row[base[1]], row[base[1] + 1], row[base[1] + 2]);
        traj.wrist.emplace_back(row[base[2]], row[base[2] + 1], row[base[2] + 2]);
    }
    for (std::size_t i = 1; i < traj.times.size(); ++i) {
        if (!(traj.times[i] > traj.times[i - 1])) {
            throw Error(ErrorKind::Sequence, path.string() + ": time not strictly increasing");
        }
    }
    if (traj.size() >= 2) {
        traj.rate = static_cast<double>(traj.size() - 1) / (traj.times.back() - traj.times.front());
    }
    traj.check_rigidity();
    return traj;
}

}  // namespace ergo::mocap
