#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include <nlohmann/json.hpp>

#include "ergo/fatigue.hpp"
#include "test_util.hpp"

using namespace ergo;
using namespace ergo::fatigue;

namespace {

// load samples on a minute grid, stored in seconds as the profiles are
dyn::LoadProfile minute_grid(double t_end_min, double spacing_min, const std::function<double(double)>& f,
                             double t0_min = 0.0) {
    dyn::LoadProfile lp;
    const auto n = static_cast<std::size_t>(std::llround((t_end_min - t0_min) / spacing_min));
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = t0_min + spacing_min * static_cast<double>(i);
        lp.times.push_back(t * 60.0);
        lp.f.push_back(f(t));
        lp.over_limit.push_back(lp.f.back() > 1.0);
    }
    return lp;
}

dyn::LoadProfile constant(double f, double t_end_min, double spacing_min) {
    return minute_grid(t_end_min, spacing_min, [f](double) { return f; });
}

double max_rel_error(const CapacityTrajectory& c, const FatigueParams& p, double f) {
    double worst = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double exact = p.mvc * std::exp(-p.k * f * c.times_min[i]);
        worst = std::max(worst, std::abs(c.capacity[i] - exact) / exact);
    }
    return worst;
}

}  // namespace

TEST_CASE("zero load keeps the initial capacity") {
    FatigueParams p;
    p.initial_capacity = 80.0;
    const auto c = integrate_capacity(p, constant(0.0, 5, 0.1), 0.01);
    for (double v : c.capacity) CHECK(v == 80.0);
    CHECK(c.normalized.front() == 0.8);
}

TEST_CASE("unit load matches the exponential") {
    FatigueParams p{100.0, 1.0, {}};
    const auto c = integrate_capacity(p, constant(1.0, 2, 0.5), 0.001);
    REQUIRE(c.times_min[2] == doctest::Approx(1.0));
    CHECK(std::abs(c.capacity[2] - 100.0 * std::exp(-1.0)) < 1e-8);
    CHECK(c.capacity[2] == doctest::Approx(36.788).epsilon(1e-5));
    CHECK(c.capacity.front() == 100.0);
}

TEST_CASE("RK4 cross-oracle and convergence order") {
    for (double k : {0.5, 1.0, 2.0}) {
        for (double f : {0.2, 0.5, 1.0}) {
            FatigueParams p{100.0, k, {}};
            const auto c = integrate_capacity(p, constant(f, 10, 0.01), 0.01);
            CHECK(c.size() == 1001);
            CHECK(max_rel_error(c, p, f) < 1e-6);
        }
    }
    FatigueParams p{100.0, 1.0, {}};
    const auto load = constant(1.0, 10, 1.0);
    const double e1 = max_rel_error(integrate_capacity(p, load, 0.2), p, 1.0);
    const double e2 = max_rel_error(integrate_capacity(p, load, 0.1), p, 1.0);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 3.8);
    CHECK(order < 4.3);
}

TEST_CASE("piecewise load switches slope by the load ratio") {
    FatigueParams p{100.0, 1.0, {}};
    const double h = 0.001;
    const auto load = minute_grid(2.0, h, [](double t) { return t <= 1.0 + 1e-12 ? 0.8 : 0.2; });
    const auto c = integrate_capacity(p, load, h);
    std::size_t sw = 0;
    while (c.times_min[sw] < 1.0 - 1e-12) ++sw;
    const double before = (c.capacity[sw] - c.capacity[sw - 1]) / h;
    const double after = (c.capacity[sw + 2] - c.capacity[sw + 1]) / h;
    CHECK(before / after == doctest::Approx(4.0).epsilon(2e-3));
    // continuity: no jump across the switch
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(std::abs(c.capacity[i] - c.capacity[i - 1]) < 0.1);
}

TEST_CASE("integrate_capacity contract errors") {
    FatigueParams p;
    auto load = constant(0.5, 1, 0.1);
    CHECK(test::error_kind_of([&] { integrate_capacity(p, load, 0.2); }) == ErrorKind::Parameter);
    CHECK(test::error_kind_of([&] { integrate_capacity(p, load, 0.0); }) == ErrorKind::Parameter);
    load.f[3] = -0.1;
    try {
        integrate_capacity(p, load, 0.05);
        FAIL("expected a domain error");
    } catch (const DomainError& e) {
        CHECK(e.code() == DomainError::Code::NegativeLoad);
        CHECK(e.kind() == ErrorKind::Domain);
    }
    FatigueParams bad{100.0, 0.0, {}};
    CHECK(test::error_kind_of([&] { integrate_capacity(bad, constant(0.5, 1, 0.1), 0.05); }) == ErrorKind::Parameter);
    FatigueParams over{100.0, 1.0, 120.0};
    CHECK(test::error_kind_of([&] { over.validate(); }) == ErrorKind::Parameter);
}

TEST_CASE("closed form and endurance time") {
    FatigueParams p{100.0, 1.0, {}};
    CHECK(capacity_closed_form(p, 0.7, 0.0) == 100.0);
    CHECK(std::abs(capacity_closed_form(p, 0.5, 2 * std::log(2.0)) - 50.0) < 1e-12);
    CHECK(endurance_time(p, 1.0) == 0.0);
    CHECK(std::abs(endurance_time(p, 0.5) - 2 * std::log(2.0)) < 1e-9);
    CHECK(endurance_time(p, 0.5) == doctest::Approx(1.3863).epsilon(1e-4));

    auto code_of = [&](double f) {
        try {
            endurance_time(p, f);
        } catch (const DomainError& e) {
            return e.code();
        }
        throw std::runtime_error("no domain error");
    };
    CHECK(code_of(0.0) == DomainError::Code::NeverReached);
    CHECK(code_of(-0.2) == DomainError::Code::NeverReached);
    CHECK(code_of(1.2) == DomainError::Code::AlreadyInfeasible);

    // strictly decreasing in f and in k
    double prev = std::numeric_limits<double>::infinity();
    for (double f = 0.05; f <= 1.0 + 1e-12; f += 0.05) {
        const double t = endurance_time(p, std::min(f, 1.0));
        CHECK(t < prev);
        prev = t;
    }
    prev = std::numeric_limits<double>::infinity();
    for (double k : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double t = endurance_time({100.0, k, {}}, 0.3);
        CHECK(t < prev);
        prev = t;
    }
}

TEST_CASE("endurance time agrees with a bisection root of the integrated capacity") {
    const double f = 0.35, k = 1.3;
    FatigueParams p{100.0, k, {}};
    auto capacity_at = [&](double t_min) {
        dyn::LoadProfile lp;
        lp.times = {0.0, t_min * 60.0};
        lp.f = {f, f};
        lp.over_limit = {false, false};
        return integrate_capacity(p, lp, 0.001).capacity.back();
    };
    double lo = 1e-6, hi = 20.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (capacity_at(mid) > f * p.mvc) lo = mid;
        else hi = mid;
    }
    CHECK(std::abs(0.5 * (lo + hi) - endurance_time(p, f)) < 1e-6);
}

TEST_CASE("monotonicity, scale invariance and the semigroup property") {
    auto shape = [](double t) { return t < 2.0 || t > 4.0 ? 0.6 * (1 + std::sin(t)) / 2 : 0.0; };
    const auto load = minute_grid(6.0, 0.05, shape);
    FatigueParams p{100.0, 1.0, {}};
    const auto c = integrate_capacity(p, load, 0.01);
    for (std::size_t i = 1; i < c.size(); ++i) {
        const bool loaded = load.f[i - 1] > 0.0 || load.f[i] > 0.0;
        if (loaded) CHECK(c.capacity[i] < c.capacity[i - 1]);
        else CHECK(c.capacity[i] == c.capacity[i - 1]);
        CHECK(c.capacity[i] > 0.0);
    }

    FatigueParams big{237.5, 1.0, {}};
    const auto cb = integrate_capacity(big, load, 0.01);
    CHECK(cb.normalized == c.normalized);

    // split at 2.5 min and restart from the intermediate state
    const auto first = minute_grid(2.5, 0.05, shape);
    const auto second = minute_grid(6.0, 0.05, shape, 2.5);
    const auto c1 = integrate_capacity(p, first, 0.01);
    FatigueParams resumed = p;
    resumed.initial_capacity = c1.capacity.back();
    const auto c2 = integrate_capacity(resumed, second, 0.01);
    REQUIRE(c1.size() + c2.size() - 1 == c.size());
    for (std::size_t i = 0; i < c2.size(); ++i) {
        CHECK(std::abs(c2.capacity[i] - c.capacity[c1.size() - 1 + i]) < 1e-10);
    }
}

TEST_CASE("capacity summary") {
    FatigueParams p{100.0, 1.0, {}};
    const auto zero = constant(0.0, 3, 0.01);
    const auto sz = capacity_summary(integrate_capacity(p, zero, 0.01), zero);
    CHECK(sz.end_ratio == 1.0);
    CHECK(sz.min_ratio == 1.0);
    CHECK_FALSE(sz.infeasible_onset_min.has_value());
    CHECK(sz.total_fatigue == 0.0);

    const auto full = constant(1.0, 3, 0.01);
    const auto sf = capacity_summary(integrate_capacity(p, full, 0.01), full);
    REQUIRE(sf.infeasible_onset_min.has_value());
    CHECK(*sf.infeasible_onset_min == 0.0);

    const auto half = constant(0.5, 3, 0.01);
    const auto ch = integrate_capacity(p, half, 0.01);
    const auto sh = capacity_summary(ch, half);
    REQUIRE(sh.infeasible_onset_min.has_value());
    CHECK(std::abs(*sh.infeasible_onset_min - 2 * std::log(2.0)) <= 0.01 + 1e-12);
    CHECK(sh.end_ratio == ch.normalized.back());
    // total normalized fatigue equals the capacity drop for this ODE
    CHECK(std::abs(sh.total_fatigue - (1.0 - ch.normalized.back())) < 1e-4);

    auto shifted = half;
    shifted.times[5] += 0.1;
    CHECK(test::error_kind_of([&] { capacity_summary(ch, shifted); }) == ErrorKind::Alignment);
    auto shorter = half;
    shorter.times.pop_back();
    shorter.f.pop_back();
    shorter.over_limit.pop_back();
    CHECK(test::error_kind_of([&] { capacity_summary(ch, shorter); }) == ErrorKind::Alignment);

    const auto j = nlohmann::json::parse(sh.to_json_text());
    for (const char* key : {"end_capacity_ratio", "min_capacity_ratio", "infeasibility_onset_min",
                            "total_normalized_fatigue"}) {
        CHECK(j.contains(key));
    }
    CHECK(nlohmann::json::parse(sz.to_json_text())["infeasibility_onset_min"].is_null());
}

TEST_CASE("capacity CSV round trip") {
    const auto dir = test::scratch_dir("fatigue_io");
    FatigueParams p{150.0, 0.8, {}};
    const auto load = constant(0.4, 1, 0.1);
    const auto c = integrate_capacity(p, load, 0.01);
    write_capacity_csv(dir / "c.csv", c);
    CHECK(test::read_file(dir / "c.csv").rfind("time_min,F_cem,F_cem_over_MVC\n", 0) == 0);
    const auto back = read_capacity_csv(dir / "c.csv");
    CHECK(back.times_min == c.times_min);
    CHECK(back.capacity == c.capacity);
    CHECK(back.normalized == c.normalized);
    CHECK(back.mvc == doctest::Approx(150.0));
}
