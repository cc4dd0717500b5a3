#include "ergo/fatigue.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ergo/csv.hpp"
#include "ergo/error.hpp"

namespace ergo::fatigue {

namespace {

constexpr double kSecondsPerMinute = 60.0;

}  // namespace

void FatigueParams::validate() const {
    if (!(mvc > 0.0) || !std::isfinite(mvc)) throw Error(ErrorKind::Parameter, "fatigue: mvc must be > 0");
    if (!(k > 0.0) || !std::isfinite(k)) throw Error(ErrorKind::Parameter, "fatigue: k must be > 0");
    const double c0 = initial();
    if (!(c0 > 0.0) || c0 > mvc) {
        throw Error(ErrorKind::Parameter, "fatigue: initial capacity must lie in (0, mvc]");
    }
}

CapacityTrajectory integrate_capacity(const FatigueParams& params, const dyn::LoadProfile& load, double dt_min) {
    params.validate();
    if (!(dt_min > 0.0)) throw Error(ErrorKind::Parameter, "fatigue: dt must be > 0");
    const std::size_t n = load.size();
    if (n == 0) throw Error(ErrorKind::InsufficientData, "fatigue: empty load profile");
    if (load.f.size() != n) throw Error(ErrorKind::Alignment, "fatigue: load profile size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(load.f[i] >= 0.0)) {
            throw DomainError(DomainError::Code::NegativeLoad,
                              "fatigue: negative relative load at sample " + std::to_string(i));
        }
    }

    CapacityTrajectory out;
    out.mvc = params.mvc;
    out.k = params.k;
    out.times_min.reserve(n);
    for (double t : load.times) out.times_min.push_back(t / kSecondsPerMinute);
    for (std::size_t i = 1; i < n; ++i) {
        const double spacing = out.times_min[i] - out.times_min[i - 1];
        if (!(spacing > 0.0)) throw Error(ErrorKind::Sequence, "fatigue: load times must increase");
        if (dt_min > spacing * (1.0 + 1e-9)) {
            throw Error(ErrorKind::Parameter, "fatigue: dt larger than the load grid spacing");
        }
    }

    const double k = params.k;
    double c = params.initial() / params.mvc;
    out.normalized.reserve(n);
    out.normalized.push_back(c);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double t0 = out.times_min[i];
        const double span = out.times_min[i + 1] - t0;
        const double f0 = load.f[i];
        const double f1 = load.f[i + 1];
        const double steps = std::max(1.0, std::ceil(span / dt_min - 1e-9));
        const double h = span / steps;
        auto f_at = [&](double tau) { return f0 + (f1 - f0) * (tau / span); };
        for (double s = 0; s < steps; s += 1.0) {
            const double tau = s * h;
            const double fa = f_at(tau);
            const double fm = f_at(tau + 0.5 * h);
            const double fb = f_at(tau + h);
            const double k1 = -k * fa * c;
            const double k2 = -k * fm * (c + 0.5 * h * k1);
            const double k3 = -k * fm * (c + 0.5 * h * k2);
            const double k4 = -k * fb * (c + h * k3);
            c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.normalized.push_back(c);
    }
    out.capacity.reserve(n);
    for (double v : out.normalized) out.capacity.push_back(v * params.mvc);
    return out;
}

double capacity_closed_form(const FatigueParams& params, double f, double t_min) {
    params.validate();
    if (!(f >= 0.0)) throw DomainError(DomainError::Code::NegativeLoad, "fatigue: relative load must be >= 0");
    return params.initial() * std::exp(-params.k * f * t_min);
}

double endurance_time(const FatigueParams& params, double f) {
    params.validate();
    if (!(f > 0.0)) {
        throw DomainError(DomainError::Code::NeverReached, "endurance time: load f <= 0 never exhausts capacity");
    }
    const double c0 = params.initial() / params.mvc;
    if (f > c0) {
        throw DomainError(DomainError::Code::AlreadyInfeasible,
                          "endurance time: load exceeds the initial capacity");
    }
    if (f == c0) return 0.0;
    return std::log(c0 / f) / (params.k * f);
}

std::string CapacitySummary::to_json_text() const {
    nlohmann::ordered_json j;
    j["end_capacity_ratio"] = end_ratio;
    j["min_capacity_ratio"] = min_ratio;
    j["infeasibility_onset_min"] = infeasible_onset_min ? nlohmann::ordered_json(*infeasible_onset_min) : nlohmann::ordered_json(nullptr);
    j["total_normalized_fatigue"] = total_fatigue;
    return j.dump(2) + "\n";
}

CapacitySummary capacity_summary(const CapacityTrajectory& traj, const dyn::LoadProfile& load) {
    const std::size_t n = traj.size();
    if (n == 0 || load.size() != n) throw Error(ErrorKind::Alignment, "capacity summary: grid size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(load.times[i] / kSecondsPerMinute - traj.times_min[i]) > 1e-12 * (1.0 + traj.times_min[i])) {
            throw Error(ErrorKind::Alignment, "capacity summary: time grids differ at sample " + std::to_string(i));
        }
    }
    CapacitySummary s;
    s.end_ratio = traj.normalized.back();
    s.min_ratio = *std::min_element(traj.normalized.begin(), traj.normalized.end());
    for (std::size_t i = 0; i < n; ++i) {
        // infeasible once the remaining capacity no longer exceeds the demand
        if (load.f[i] > 0.0 && traj.normalized[i] <= load.f[i]) {
            s.infeasible_onset_min = traj.times_min[i];
            break;
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = traj.k * traj.normalized[i] * load.f[i];
        const double b = traj.k * traj.normalized[i + 1] * load.f[i + 1];
        total += 0.5 * (a + b) * (traj.times_min[i + 1] - traj.times_min[i]);
    }
    s.total_fatigue = total;
    return s;
}

void write_capacity_csv(const std::filesystem::path& path, const CapacityTrajectory& traj) {
    csv::NumericTable table;
    table.header = {"time_min", "F_cem", "F_cem_over_MVC"};
    for (std::size_t i = 0; i < traj.size(); ++i) {
        table.rows.push_back({traj.times_min[i], traj.capacity[i], traj.normalized[i]});
    }
    csv::write_numeric(path, table);
}

CapacityTrajectory read_capacity_csv(const std::filesystem::path& path) {
    const auto table = csv::read_numeric(path);
    CapacityTrajectory out;
    out.times_min = table.series("time_min");
    out.capacity = table.series("F_cem");
    out.normalized = table.series("F_cem_over_MVC");
    if (!out.capacity.empty() && out.normalized.front() > 0.0) out.mvc = out.capacity.front() / out.normalized.front();
    return out;
}

}  // namespace ergo::fatigue
