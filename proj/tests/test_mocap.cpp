#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ergo/mocap.hpp"
#include "ergo/synthetic.hpp"
#include "test_util.hpp"

using namespace ergo;
using namespace ergo::mocap;

namespace {

MarkerTrajectory make_traj(const std::string& label, std::size_t n, double rate,
                           const std::function<Vec3(double)>& f) {
    MarkerTrajectory t;
    t.label = label;
    t.rate = rate;
    for (std::size_t i = 0; i < n; ++i) {
        const double time = static_cast<double>(i) / rate;
        t.samples.push_back({time, f(time)});
    }
    return t;
}

TrackerMap single_map() {
    TrackerMap m;
    m.members = {{{"S1"}, {"E1"}, {"W1"}}};
    return m;
}

}  // namespace

TEST_CASE("parse_capture_csv converts millimeters to meters") {
    const auto dir = test::scratch_dir("mocap_parse");
    test::write_file(dir / "c.csv", "Frame,Time,W1.x,W1.y,W1.z\n0,0,100,0,0\n1,0.01,100,0,0\n");
    const auto cap = parse_capture_csv(dir / "c.csv", Units::Millimeters);
    REQUIRE(cap.rows.size() == 2);
    CHECK(cap.column_labels == std::vector<std::string>{"W1.x", "W1.y", "W1.z"});
    for (const auto& row : cap.rows) {
        CHECK(*row.values[0] == 0.1);
        CHECK(*row.values[1] == 0.0);
        CHECK(*row.values[2] == 0.0);
    }
    const auto m = parse_capture_csv(dir / "c.csv", Units::Meters);
    CHECK(*m.rows[0].values[0] == 100.0);
}

TEST_CASE("parse_capture_csv contract errors") {
    const auto dir = test::scratch_dir("mocap_errors");
    test::write_file(dir / "notime.csv", "Frame,W1.x,W1.y,W1.z\n0,1,2,3\n");
    CHECK(test::error_kind_of([&] { parse_capture_csv(dir / "notime.csv", Units::Meters); }) == ErrorKind::Format);

    test::write_file(dir / "empty.csv", "");
    CHECK(test::error_kind_of([&] { parse_capture_csv(dir / "empty.csv", Units::Meters); }) == ErrorKind::Format);

    test::write_file(dir / "back.csv", "Frame,Time,W1.x,W1.y,W1.z\n0,0.02,1,2,3\n1,0.01,1,2,3\n");
    CHECK(test::error_kind_of([&] { parse_capture_csv(dir / "back.csv", Units::Meters); }) == ErrorKind::Sequence);

    test::write_file(dir / "frames.csv", "Frame,Time,W1.x,W1.y,W1.z\n3,0,1,2,3\n3,0.01,1,2,3\n");
    CHECK(test::error_kind_of([&] { parse_capture_csv(dir / "frames.csv", Units::Meters); }) == ErrorKind::Sequence);

    test::write_file(dir / "ragged.csv", "Frame,Time,W1.x,W1.y,W1.z\n0,0,1,2,3\n1,0.01,1,2\n");
    const auto msg = test::error_message_of([&] { parse_capture_csv(dir / "ragged.csv", Units::Meters); });
    CHECK(msg.find("line 3") != std::string::npos);
}

TEST_CASE("synthetic capture round-trips through the parser exactly") {
    const auto dir = test::scratch_dir("mocap_roundtrip");
    synth::MotionSpec spec;
    spec.rate = 100.0;
    spec.duration = 9.99;  // 1000 rows
    spec.theta[0] = {0.1, 0.3, 0.2, 0.0};
    spec.theta[2] = {1.0, 0.5, 0.3, 0.1};
    spec.noise_sigma = 0.001;
    const auto generated = synth::generate_synthetic(spec, dir / "cap.csv");
    REQUIRE(generated.times.size() == 1000);

    const auto cap = parse_capture_csv(dir / "cap.csv", Units::Millimeters);
    REQUIRE(cap.rows.size() == 1000);
    CHECK(cap.column_labels == generated.column_labels());
    bool exact = true;
    for (std::size_t r = 0; r < cap.rows.size(); ++r) {
        exact = exact && cap.rows[r].time == generated.times[r] && cap.rows[r].frame == static_cast<long long>(r);
        for (std::size_t c = 0; c < cap.column_labels.size(); ++c) {
            exact = exact && *cap.rows[r].values[c] == generated.values[r][c] / 1000.0;
        }
    }
    CHECK(exact);

    // parse -> serialize -> parse is the identity on content
    write_capture_csv(dir / "again.csv", cap, Units::Meters);
    const auto again = parse_capture_csv(dir / "again.csv", Units::Meters);
    REQUIRE(again.rows.size() == cap.rows.size());
    CHECK(again.column_labels == cap.column_labels);
    bool same = true;
    for (std::size_t r = 0; r < cap.rows.size(); ++r) {
        same = same && again.rows[r].frame == cap.rows[r].frame && again.rows[r].time == cap.rows[r].time &&
               again.rows[r].values == cap.rows[r].values;
    }
    CHECK(same);
}

TEST_CASE("extract_marker all-or-nothing presence and lookup errors") {
    const auto dir = test::scratch_dir("mocap_extract");
    test::write_file(dir / "c.csv",
                     "Frame,Time,A.x,A.y,A.z,B.x,B.y,B.z\n0,0,1,2,3,4,5,6\n1,0.01,1,,3,4,5,6\n2,0.02,1,2,3,4,5,6\n");
    const auto cap = parse_capture_csv(dir / "c.csv", Units::Meters);
    const auto a = extract_marker(cap, "A");
    CHECK(a.samples.size() == cap.rows.size());
    CHECK(a.samples[0].position.has_value());
    CHECK_FALSE(a.samples[1].position.has_value());
    CHECK(*extract_marker(cap, "B").samples[1].position == Vec3(4, 5, 6));
    const auto msg = test::error_message_of([&] { extract_marker(cap, "Q9"); });
    CHECK(msg.find("Q9") != std::string::npos);
    CHECK(msg.find("A, B") != std::string::npos);
    CHECK(test::error_kind_of([&] { extract_marker(cap, "Q9"); }) == ErrorKind::Lookup);
}

TEST_CASE("fill_gaps interpolates short bounded gaps only") {
    MarkerTrajectory t;
    t.label = "M";
    t.samples = {{0.0, Vec3(0, 0, 0)}, {0.01, std::nullopt}, {0.02, Vec3(2, 0, 0)}};
    const auto r = fill_gaps(t, 5);
    CHECK(test::max_abs_diff(*r.trajectory.samples[1].position, Vec3(1, 0, 0)) < 1e-15);
    CHECK(r.residual_gaps.empty());

    auto long_gap = make_traj("L", 30, 100.0, [](double s) { return Vec3(s, 0, 0); });
    for (std::size_t i = 10; i < 20; ++i) long_gap.samples[i].position.reset();
    const auto lr = fill_gaps(long_gap, 5);
    REQUIRE(lr.residual_gaps.size() == 1);
    CHECK(lr.residual_gaps[0].first == 10);
    CHECK(lr.residual_gaps[0].last == 19);
    CHECK_FALSE(lr.residual_gaps[0].at_boundary);
    for (std::size_t i = 10; i < 20; ++i) CHECK_FALSE(lr.trajectory.samples[i].position.has_value());

    auto edges = make_traj("E", 10, 100.0, [](double s) { return Vec3(s, 1, 2); });
    edges.samples[0].position.reset();
    edges.samples[9].position.reset();
    const auto er = fill_gaps(edges, 5);
    CHECK_FALSE(er.trajectory.samples[0].position.has_value());
    CHECK_FALSE(er.trajectory.samples[9].position.has_value());
    CHECK(er.residual_gaps.size() == 2);
    CHECK(er.residual_gaps[0].at_boundary);

    MarkerTrajectory sparse;
    sparse.samples = {{0.0, Vec3::Zero()}, {0.01, std::nullopt}};
    CHECK(test::error_kind_of([&] { fill_gaps(sparse, 5); }) == ErrorKind::InsufficientData);
}

TEST_CASE("fill_gaps error on a quadratic is the second-difference residual") {
    const double a = 3.7, b = -1.2, c = 0.4;
    auto f = [&](double s) { return Vec3(a * s * s + b * s + c, 0, 0); };
    auto t = make_traj("Q", 21, 100.0, f);
    const std::size_t k = 10;
    const Vec3 truth = *t.samples[k].position;
    t.samples[k].position.reset();
    const auto filled = *fill_gaps(t, 1).trajectory.samples[k].position;
    const double second_diff = f(t.samples[k - 1].time).x() - 2.0 * truth.x() + f(t.samples[k + 1].time).x();
    CHECK(std::abs((filled.x() - truth.x()) - 0.5 * second_diff) < 1e-14);
    CHECK(std::abs(filled.x() - truth.x()) > 1e-6);
}

TEST_CASE("fill_gaps never modifies present samples") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::bernoulli_distribution hole(0.2);
    for (int trial = 0; trial < 50; ++trial) {
        auto t = make_traj("R", 60, 100.0, [&](double) { return Vec3(u(rng), u(rng), u(rng)); });
        for (auto& s : t.samples) {
            if (hole(rng)) s.position.reset();
        }
        if (t.present_count() < 2) continue;
        const auto r = fill_gaps(t, 3);
        for (std::size_t i = 0; i < t.samples.size(); ++i) {
            if (t.samples[i].position) CHECK(*r.trajectory.samples[i].position == *t.samples[i].position);
        }
    }
}

TEST_CASE("smooth: identity, constants, affine preservation, contract errors") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    auto noisy = make_traj("N", 40, 100.0, [&](double) { return Vec3(u(rng), u(rng), u(rng)); });
    const auto same = smooth(noisy, 1);
    for (std::size_t i = 0; i < noisy.samples.size(); ++i) CHECK(*same.samples[i].position == *noisy.samples[i].position);

    auto constant = make_traj("C", 25, 100.0, [](double) { return Vec3(0.25, -0.5, 0.125); });
    for (std::size_t w : {3u, 5u, 9u}) {
        const auto s = smooth(constant, w);
        for (const auto& sample : s.samples) CHECK(*sample.position == Vec3(0.25, -0.5, 0.125));
    }

    // 10-sample ramp: any symmetric average of an affine sequence is its centre value
    auto ramp = make_traj("R", 10, 100.0, [](double s) { return Vec3(2.0 * s + 1.0, -3.0 * s, 0.5); });
    const auto sr = smooth(ramp, 5);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(test::max_abs_diff(*sr.samples[i].position, *ramp.samples[i].position) < 1e-12);
    }

    CHECK(test::error_kind_of([&] { smooth(ramp, 4); }) == ErrorKind::Parameter);
    CHECK(test::error_kind_of([&] { smooth(ramp, 0); }) == ErrorKind::Parameter);
    ramp.samples[3].position.reset();
    CHECK(test::error_kind_of([&] { smooth(ramp, 5); }) == ErrorKind::Ordering);
}

TEST_CASE("resample: fixed point, affine exactness, sine error bound") {
    auto uniform = make_traj("U", 101, 100.0, [](double s) { return Vec3(std::sin(s), std::cos(s), s); });
    const auto fixed = resample(uniform, 100.0);
    REQUIRE(fixed.samples.size() == uniform.samples.size());
    for (std::size_t i = 0; i < fixed.samples.size(); ++i) {
        CHECK(std::abs(fixed.samples[i].time - uniform.samples[i].time) < 1e-12);
        CHECK(test::max_abs_diff(*fixed.samples[i].position, *uniform.samples[i].position) < 1e-12);
    }

    // non-uniform affine input
    MarkerTrajectory affine;
    affine.label = "A";
    double time = 0.0;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> jitter(0.005, 0.015);
    auto line = [](double s) { return Vec3(1.5 * s - 0.2, 0.3, -2.0 * s); };
    for (int i = 0; i < 200; ++i) {
        affine.samples.push_back({time, line(time)});
        time += jitter(rng);
    }
    for (double rate : {37.0, 100.0, 240.0}) {
        const auto r = resample(affine, rate);
        CHECK(r.rate == rate);
        for (std::size_t i = 0; i < r.samples.size(); ++i) {
            CHECK(test::max_abs_diff(*r.samples[i].position, line(r.samples[i].time)) < 1e-12);
            if (i) CHECK(std::abs((r.samples[i].time - r.samples[i - 1].time) - 1.0 / rate) < 1e-9);
        }
    }

    // 2 Hz unit sine at 100 Hz: linear interpolation error <= h^2/8 * max|f''|
    const double w = 2.0 * EIGEN_PI * 2.0;
    const double bound = (0.01 * 0.01 / 8.0) * w * w;
    CHECK(bound < 2.5e-3);
    auto sine = make_traj("S", 301, 100.0, [&](double s) { return Vec3(std::sin(w * s), 0, 0); });
    for (double rate : {50.0, 30.0}) {
        const auto r = resample(sine, rate);
        double max_err = 0.0;
        for (const auto& s : r.samples) max_err = std::max(max_err, std::abs(s.position->x() - std::sin(w * s.time)));
        CHECK(max_err < 2.5e-3);
        CHECK(max_err <= bound + 1e-12);
    }

    CHECK(test::error_kind_of([&] { resample(sine, 0.0); }) == ErrorKind::Parameter);
    CHECK(test::error_kind_of([&] { resample(sine, -5.0); }) == ErrorKind::Parameter);
    sine.samples[4].position.reset();
    CHECK(test::error_kind_of([&] { resample(sine, 50.0); }) == ErrorKind::Ordering);
}

TEST_CASE("average_tracker_table means, permutation invariance, errors") {
    const Vec3 p(0.1, 0.2, 0.3);
    auto s1 = make_traj("S1", 5, 100.0, [&](double) { return p; });
    auto s2 = make_traj("S2", 5, 100.0, [&](double) { return p; });
    auto e1 = make_traj("E1", 5, 100.0, [](double) { return Vec3(0, 0, 0); });
    auto e2 = make_traj("E2", 5, 100.0, [](double) { return Vec3(2, 0, 0); });
    auto w1 = make_traj("W1", 5, 100.0, [](double) { return Vec3(3, 0, 0); });
    TrackerMap map;
    map.members = {{{"S1", "S2"}, {"E1", "E2"}, {"W1"}}};
    const auto art = average_tracker_table({s1, s2, e1, e2, w1}, map);
    CHECK(art.shoulder[0] == p);
    CHECK(art.elbow[0] == Vec3(1, 0, 0));
    CHECK(art.wrist[0] == Vec3(3, 0, 0));  // single member is the marker itself
    CHECK(art.warnings.size() == 1);

    // random triple, shuffled member and supply order
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<MarkerTrajectory> markers;
    for (const char* l : {"A", "B", "C"}) {
        markers.push_back(make_traj(l, 50, 100.0, [&](double) { return Vec3(u(rng), u(rng), u(rng)); }));
    }
    markers.push_back(make_traj("E", 50, 100.0, [](double) { return Vec3(1, 0, 0); }));
    markers.push_back(make_traj("W", 50, 100.0, [](double) { return Vec3(2, 0, 0); }));
    TrackerMap base;
    base.members = {{{"A", "B", "C"}, {"E"}, {"W"}}};
    const auto reference = average_tracker_table(markers, base);
    std::vector<std::string> order{"A", "B", "C"};
    for (int k = 0; k < 6; ++k) {
        std::shuffle(order.begin(), order.end(), rng);
        std::shuffle(markers.begin(), markers.end(), rng);
        TrackerMap m = base;
        m.members[0] = order;
        const auto got = average_tracker_table(markers, m);
        bool identical = true;
        for (std::size_t i = 0; i < got.size(); ++i) identical = identical && got.shoulder[i] == reference.shoulder[i];
        CHECK(identical);
    }

    auto shifted = make_traj("W1", 5, 100.0, [](double) { return Vec3(3, 0, 0); });
    for (auto& s : shifted.samples) s.time += 0.005;
    CHECK(test::error_kind_of([&] { average_tracker_table({s1, s2, e1, e2, shifted}, map); }) == ErrorKind::Alignment);
    CHECK(test::error_kind_of([&] { average_tracker_table({s1, s2, e1, w1}, map); }) == ErrorKind::Lookup);

    TrackerMap dup;
    dup.members = {{{"S1"}, {"S1"}, {"W1"}}};
    CHECK(test::error_kind_of([&] { dup.validate(); }) == ErrorKind::Parameter);
}

TEST_CASE("tracker map JSON") {
    const auto m = TrackerMap::from_json_text(R"({"shoulder":["S1","S2"],"elbow":["E1"],"wrist":["W1","W2"]})");
    CHECK(m[Articulation::Elbow] == std::vector<std::string>{"E1"});
    CHECK(TrackerMap::from_json_text(m.to_json_text()).members == m.members);
    CHECK(test::error_kind_of([] { TrackerMap::from_json_text(R"({"shoulder":["S1"],"elbow":["E1"]})"); }) ==
          ErrorKind::Format);
    CHECK(test::error_kind_of([] { TrackerMap::from_json_text(R"({"shoulder":[],"elbow":["E1"],"wrist":["W"]})"); }) ==
          ErrorKind::Parameter);
}

TEST_CASE("full ingest chain keeps a rigid synthetic arm rigid") {
    const auto dir = test::scratch_dir("mocap_chain");
    synth::MotionSpec spec;
    spec.duration = 4.0;
    spec.shoulder = Vec3(0.4, 1.1, 0.9);
    // slow motion: smoothing shortens a moving segment by about v^2 var / (2 r)
    spec.theta[0] = {0.2, 0.05, 0.1, 0.0};
    spec.theta[1] = {0.1, 0.05, 0.1, 0.5};
    spec.theta[2] = {1.0, 0.05, 0.1, 0.0};
    spec.gaps = {{"E1", 50, 2}, {"W2", 0, 3}};
    const auto gen = synth::generate_synthetic(spec, dir / "cap.csv");
    const auto cap = parse_capture_csv(dir / "cap.csv", Units::Millimeters);
    const auto result = ingest(cap, gen.tracker_map, {});
    const auto& traj = result.trajectory;
    CHECK(traj.times.front() == doctest::Approx(0.03));  // leading gap trimmed
    auto spread = [&](const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
        std::vector<double> len;
        for (std::size_t i = 0; i < traj.size(); ++i) len.push_back((b[i] - a[i]).norm());
        auto sorted = len;
        std::sort(sorted.begin(), sorted.end());
        const double med = sorted[sorted.size() / 2];
        double worst = 0.0;
        for (double v : len) worst = std::max(worst, std::abs(v - med));
        return worst;
    };
    CHECK(spread(traj.shoulder, traj.elbow) < 1e-6);
    CHECK(spread(traj.elbow, traj.wrist) < 1e-6);
    CHECK(traj.rigidity_violations.empty());
    REQUIRE(result.residual_gaps.size() == 1);
    CHECK(result.residual_gaps[0].at_boundary);

    synth::MotionSpec broken = spec;
    broken.gaps = {{"E1", 50, 40}};
    const auto gen2 = synth::generate_synthetic(broken, dir / "broken.csv");
    const auto cap2 = parse_capture_csv(dir / "broken.csv", Units::Millimeters);
    CHECK(test::error_kind_of([&] { ingest(cap2, gen2.tracker_map, {}); }) == ErrorKind::Sequence);
}

TEST_CASE("articulation CSV round-trip") {
    const auto dir = test::scratch_dir("mocap_artcsv");
    ArticulationTrajectory t;
    for (int i = 0; i < 5; ++i) {
        t.times.push_back(i * 0.01);
        t.shoulder.emplace_back(0.1 * i, 0.2, 1.0 / 3.0);
        t.elbow.emplace_back(0.3, 0.1 * i, 0.7);
        t.wrist.emplace_back(0.55, 0.0, 0.1 * i + 1e-17);
    }
    write_articulation_csv(dir / "t.csv", t);
    CHECK(test::read_file(dir / "t.csv").rfind("time,shoulder.x,shoulder.y,shoulder.z,elbow.x", 0) == 0);
    const auto back = read_articulation_csv(dir / "t.csv");
    CHECK(back.times == t.times);
    CHECK(back.shoulder == t.shoulder);
    CHECK(back.elbow == t.elbow);
    CHECK(back.wrist == t.wrist);
}
