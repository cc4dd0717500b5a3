#include <doctest.h>

#include <cmath>

#include "ergo/synthetic.hpp"
#include "test_util.hpp"

using namespace ergo;
using namespace ergo::synth;

TEST_CASE("grid arithmetic: 10 s at 100 Hz is 1001 rows") {
    MotionSpec spec;
    CHECK(spec.frame_count() == 1001);
    const auto cap = generate(spec);
    CHECK(cap.times.size() == 1001);
    CHECK(cap.times.back() == 10.0);
    CHECK(cap.labels == std::vector<std::string>{"S1", "S2", "E1", "E2", "W1", "W2"});
}

TEST_CASE("symmetric markers average to the FK points") {
    for (std::size_t per : {2u, 4u, 6u}) {
        MotionSpec spec;
        spec.duration = 2.0;
        spec.units = mocap::Units::Meters;
        spec.markers_per_articulation = per;
        spec.shoulder = Vec3(0.5, 1.2, 0.8);
        spec.axis_mapping = {"+x", "+z", "-y"};
        spec.theta[0] = {0.3, 0.2, 0.1, 0.0};
        spec.theta[1] = {0.0, 0.2, 0.15, 0.0};
        spec.theta[2] = {EIGEN_PI / 4, EIGEN_PI / 4, 0.25, -EIGEN_PI / 2};
        const auto cap = generate(spec);
        const auto geom = kin::ArmGeometry::make(spec.d3, spec.d4);
        const Mat3 lab = kin::AxisMapping::parse(spec.axis_mapping).matrix().transpose();
        double worst = 0;
        for (std::size_t r = 0; r < cap.times.size(); ++r) {
            const auto fk = kin::forward_kinematics(geom, spec.angles_at(cap.times[r]));
            const Vec3 truth[3] = {spec.shoulder, spec.shoulder + lab * fk.elbow, spec.shoulder + lab * fk.wrist};
            for (std::size_t a = 0; a < 3; ++a) {
                Vec3 sum = Vec3::Zero();
                for (std::size_t m = 0; m < per; ++m) {
                    const std::size_t col = 3 * (a * per + m);
                    sum += Vec3(cap.values[r][col], cap.values[r][col + 1], cap.values[r][col + 2]);
                }
                worst = std::max(worst, test::max_abs_diff(sum / double(per), truth[a]));
            }
        }
        CHECK(worst < 1e-12);
        CHECK(cap.tracker_map.members[1].size() == per);
    }
}

TEST_CASE("constant angles give identical rows, noise is seeded") {
    MotionSpec spec;
    spec.duration = 0.5;
    spec.theta[0] = {0.4, 0, 0, 0};
    spec.theta[2] = {1.1, 0, 0, 0};
    const auto cap = generate(spec);
    for (const auto& row : cap.values) CHECK(row == cap.values.front());

    spec.noise_sigma = 0.001;
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK(a.values == b.values);
    spec.seed = 2;
    CHECK(generate(spec).values != a.values);
    double sq = 0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < a.values.size(); ++r) {
        for (std::size_t c = 0; c < a.values[r].size(); ++c) {
            const double d = (a.values[r][c] - cap.values[r][c]) / 1000.0;
            sq += d * d;
            ++n;
        }
    }
    CHECK(std::sqrt(sq / n) == doctest::Approx(0.001).epsilon(0.1));
}

TEST_CASE("gaps, units and validation") {
    MotionSpec spec;
    spec.duration = 0.2;
    spec.gaps = {{"E2", 3, 4}};
    const auto cap = generate(spec);
    for (std::size_t r = 0; r < cap.times.size(); ++r) {
        const bool gap = r >= 3 && r < 7;
        CHECK(std::isnan(cap.values[r][9]) == gap);
        CHECK_FALSE(std::isnan(cap.values[r][6]));
    }
    spec.gaps = {{"Z9", 0, 1}};
    CHECK(test::error_kind_of([&] { generate(spec); }) == ErrorKind::Parameter);

    MotionSpec bad;
    bad.d3 = -0.3;
    CHECK(test::error_kind_of([&] { generate(bad); }) == ErrorKind::Parameter);
    bad = MotionSpec{};
    bad.markers_per_articulation = 3;
    CHECK(test::error_kind_of([&] { generate(bad); }) == ErrorKind::Parameter);
    bad = MotionSpec{};
    bad.axis_mapping = {"+x", "+x", "+y"};
    CHECK(test::error_kind_of([&] { generate(bad); }) == ErrorKind::Parameter);

    MotionSpec m;
    m.duration = 0.1;
    m.units = mocap::Units::Meters;
    const auto meters = generate(m);
    m.units = mocap::Units::Millimeters;
    const auto mm = generate(m);
    CHECK(mm.values[0][0] == meters.values[0][0] * 1000.0);
}

TEST_CASE("motion spec JSON") {
    const auto spec = MotionSpec::from_json_text(R"({
      "d3": 0.32, "d4": 0.27, "rate": 50, "duration": 2,
      "theta": [0.3, {"offset": 0.1, "amplitude": 0.2, "frequency": 0.5}, {"offset": 1.0}],
      "shoulder": [0.5, 1.2, 0.8], "axis_mapping": ["+x", "+z", "-y"],
      "markers_per_articulation": 4, "noise_sigma": 0.0005, "seed": 9, "units": "m",
      "gaps": [{"marker": "W3", "start": 10, "length": 5}]
    })");
    CHECK(spec.d3 == 0.32);
    CHECK(spec.theta[0].offset == 0.3);
    CHECK(spec.theta[1].amplitude == 0.2);
    CHECK(spec.theta[2].offset == 1.0);
    CHECK(spec.frame_count() == 101);
    CHECK(spec.units == mocap::Units::Meters);
    CHECK(spec.gaps.size() == 1);
    CHECK(test::error_kind_of([] { MotionSpec::from_json_text("{\"theta\": [1, 2]}"); }) == ErrorKind::Format);
    CHECK(test::error_kind_of([] { MotionSpec::from_json_text("{\"d4\": 0}"); }) == ErrorKind::Parameter);
    CHECK(test::error_kind_of([] { MotionSpec::from_json_text("not json"); }) == ErrorKind::Format);
}
