#pragma once

// Dynamic muscle-fatigue capacity model
//
//   dF_cem/dt = -k * (F_cem / MVC) * F_load,   F_load = f(t) * MVC
//
// integrated with fixed-step classical RK4. Time is in minutes here; load
// profiles arrive with times in seconds and are converted at entry.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ergo/dynamics.hpp"

namespace ergo::fatigue {

struct FatigueParams {
    double mvc = 100.0;
    double k = 1.0;  // per minute
    std::optional<double> initial_capacity;

    double initial() const { return initial_capacity.value_or(mvc); }
    void validate() const;
};

struct CapacityTrajectory {
    std::vector<double> times_min;
    std::vector<double> capacity;
    std::vector<double> normalized;
    double mvc = 0.0;
    double k = 0.0;

    std::size_t size() const { return times_min.size(); }
};

/// Output lies on the load grid. Each grid interval is split into the
/// smallest number of equal RK4 steps not longer than `dt_min`.
CapacityTrajectory integrate_capacity(const FatigueParams& params, const dyn::LoadProfile& load, double dt_min);

double capacity_closed_form(const FatigueParams& params, double f, double t_min);

/// First time at which the remaining capacity equals the constant load.
double endurance_time(const FatigueParams& params, double f);

struct CapacitySummary {
    double end_ratio = 1.0;
    double min_ratio = 1.0;
    std::optional<double> infeasible_onset_min;
    double total_fatigue = 0.0;

    std::string to_json_text() const;
};

CapacitySummary capacity_summary(const CapacityTrajectory& traj, const dyn::LoadProfile& load);

void write_capacity_csv(const std::filesystem::path& path, const CapacityTrajectory& traj);
CapacityTrajectory read_capacity_csv(const std::filesystem::path& path);

}  // namespace ergo::fatigue
