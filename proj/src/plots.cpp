#include "ergo/plots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ergo/csv.hpp"
#include "ergo/error.hpp"

namespace ergo::plots {

namespace {

constexpr std::array<const char*, 4> kColors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    std::string s(buf);
    if (s == "-0.0000") s = "0.0000";
    return s;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << content;
}

}  // namespace

std::string render_chart(const ChartSpec& chart, const Frame& frame) {
    if (chart.series.empty()) throw Error(ErrorKind::Plot, "plot '" + chart.title + "': no series");
    for (const auto& s : chart.series) {
        if (s.y.size() < 2) throw Error(ErrorKind::Plot, "plot '" + chart.title + "': series '" + s.name + "' has fewer than two samples");
        if (s.y.size() != chart.x.size()) throw Error(ErrorKind::Plot, "plot '" + chart.title + "': series '" + s.name + "' does not match the x axis");
    }
    const double x0 = chart.x.front();
    const double x1 = chart.x.back();
    double y0, y1;
    if (chart.y_range) {
        std::tie(y0, y1) = *chart.y_range;
    } else {
        y0 = y1 = chart.series.front().y.front();
        for (const auto& s : chart.series) {
            const auto [lo, hi] = std::minmax_element(s.y.begin(), s.y.end());
            y0 = std::min(y0, *lo);
            y1 = std::max(y1, *hi);
        }
        if (y1 - y0 < 1e-12) {
            y0 -= 1.0;
            y1 += 1.0;
        }
    }
    const double xs = x1 > x0 ? frame.plot_width() / (x1 - x0) : 0.0;
    const double ys = frame.plot_height() / (y1 - y0);
    auto px = [&](double x) { return frame.left + (x - x0) * xs; };
    auto py = [&](double y) { return frame.top + (y1 - y) * ys; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(frame.width, 0) << "\" height=\""
        << fixed(frame.height, 0) << "\" viewBox=\"0 0 " << fixed(frame.width, 0) << ' ' << fixed(frame.height, 0)
        << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << fixed(frame.width, 0) << "\" height=\"" << fixed(frame.height, 0)
        << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << fixed(frame.width / 2, 1) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << escape(chart.title) << "</text>\n";
    svg << "<rect x=\"" << fixed(frame.left, 1) << "\" y=\"" << fixed(frame.top, 1) << "\" width=\""
        << fixed(frame.plot_width(), 1) << "\" height=\"" << fixed(frame.plot_height(), 1)
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0;
        const double yv = y0 + (y1 - y0) * i / 4.0;
        svg << "<text x=\"" << fixed(px(xv), 1) << "\" y=\"" << fixed(frame.height - frame.bottom + 16, 1)
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fixed(xv, 2) << "</text>\n";
        svg << "<text x=\"" << fixed(frame.left - 6, 1) << "\" y=\"" << fixed(py(yv) + 4, 1)
            << "\" text-anchor=\"end\" font-size=\"11\">" << fixed(yv, 3) << "</text>\n";
    }
    svg << "<text x=\"" << fixed(frame.left + frame.plot_width() / 2, 1) << "\" y=\"" << fixed(frame.height - 10, 1)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(chart.x_label) << "</text>\n";
    svg << "<text x=\"16\" y=\"" << fixed(frame.top + frame.plot_height() / 2, 1)
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
        << fixed(frame.top + frame.plot_height() / 2, 1) << ")\">" << escape(chart.y_label) << "</text>\n";
    for (std::size_t s = 0; s < chart.series.size(); ++s) {
        const auto& series = chart.series[s];
        svg << "<polyline fill=\"none\" stroke=\"" << kColors[s % kColors.size()] << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series.y.size(); ++i) {
            if (i) svg << ' ';
            svg << fixed(px(chart.x[i])) << ',' << fixed(py(series.y[i]));
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << fixed(frame.width - frame.right - 4, 1) << "\" y=\""
            << fixed(frame.top + 14 + 14 * static_cast<double>(s), 1) << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
            << kColors[s % kColors.size()] << "\">" << escape(series.name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::vector<std::pair<double, double>> polyline_points(const std::string& svg, std::size_t which) {
    std::size_t pos = 0;
    for (std::size_t k = 0; k <= which; ++k) {
        pos = svg.find("<polyline", pos);
        if (pos == std::string::npos) return {};
        if (k < which) ++pos;
    }
    const auto start = svg.find("points=\"", pos);
    if (start == std::string::npos) return {};
    const auto end = svg.find('"', start + 8);
    std::istringstream in(svg.substr(start + 8, end - start - 8));
    std::vector<std::pair<double, double>> pts;
    std::string token;
    while (in >> token) {
        const auto comma = token.find(',');
        pts.emplace_back(std::stod(token.substr(0, comma)), std::stod(token.substr(comma + 1)));
    }
    return pts;
}

void render_plots(const std::filesystem::path& artifacts, const std::filesystem::path& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + out.string() + ": " + ec.message());
    {
        const auto t = csv::read_numeric(artifacts / "angles.csv");
        ChartSpec c{"Joint angles", "time [s]", "angle [rad]", t.series("time"),
                    {{"theta1", t.series("theta1")}, {"theta2", t.series("theta2")}, {"theta3", t.series("theta3")}},
                    std::nullopt};
        write_file(out / "angles.svg", render_chart(c));
    }
    {
        const auto t = csv::read_numeric(artifacts / "torques.csv");
        ChartSpec c{"Joint torques", "time [s]", "torque [N m]", t.series("time"),
                    {{"tau1", t.series("tau1")}, {"tau2", t.series("tau2")}, {"tau3", t.series("tau3")}},
                    std::nullopt};
        write_file(out / "torques.svg", render_chart(c));
    }
    {
        const auto t = csv::read_numeric(artifacts / "capacity.csv");
        ChartSpec c{"Remaining capacity", "time [min]", "F_cem / MVC", t.series("time_min"),
                    {{"F_cem/MVC", t.series("F_cem_over_MVC")}}, std::make_pair(0.0, 1.0)};
        write_file(out / "capacity.svg", render_chart(c));
    }
}

}  // namespace ergo::plots
