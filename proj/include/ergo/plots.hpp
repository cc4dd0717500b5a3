#pragma once

// Deterministic, self-contained SVG line charts.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ergo::plots {

struct Series {
    std::string name;
    std::vector<double> y;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> x;
    std::vector<Series> series;
    /// Fixed y range; derived from the data when absent.
    std::optional<std::pair<double, double>> y_range;
};

struct Frame {
    double width = 640.0;
    double height = 400.0;
    double left = 70.0;
    double right = 20.0;
    double top = 40.0;
    double bottom = 50.0;

    double plot_width() const { return width - left - right; }
    double plot_height() const { return height - top - bottom; }
};

std::string render_chart(const ChartSpec& chart, const Frame& frame = {});

/// Parses the points attribute of the first polyline in `svg`.
std::vector<std::pair<double, double>> polyline_points(const std::string& svg, std::size_t which = 0);

/// Writes angles.svg, torques.svg and capacity.svg from the CSVs in
/// `artifacts` into `out`.
void render_plots(const std::filesystem::path& artifacts, const std::filesystem::path& out);

}  // namespace ergo::plots
