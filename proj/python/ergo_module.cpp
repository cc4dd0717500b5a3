// Python bindings for the core numerics and the pipeline entry points.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ergo/dynamics.hpp"
#include "ergo/error.hpp"
#include "ergo/fatigue.hpp"
#include "ergo/kinematics.hpp"
#include "ergo/mocap.hpp"
#include "ergo/pipeline.hpp"
#include "ergo/replay.hpp"
#include "ergo/synthetic.hpp"
#include "ergo/version.hpp"

namespace py = pybind11;
using namespace ergo;

namespace {

kin::JointAngles angles_of(const std::array<double, 3>& q) { return {q[0], q[1], q[2]}; }

dyn::LoadProfile load_of(const std::vector<double>& times_s, const std::vector<double>& f) {
    if (times_s.size() != f.size()) throw Error(ErrorKind::Alignment, "times and f differ in length");
    dyn::LoadProfile lp;
    lp.times = times_s;
    lp.f = f;
    for (double v : f) lp.over_limit.push_back(v > 1.0);
    return lp;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Arm kinematics, joint torques, muscle fatigue and a small rigid-body world";
    m.attr("__version__") = kVersion;

    static py::exception<Error> ergo_error(m, "ErgoError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            ergo_error(("[" + std::string(to_string(e.kind())) + "] " + e.what()).c_str());
        }
    });

    py::class_<kin::JointAngles>(m, "JointAngles")
        .def_readonly("theta1", &kin::JointAngles::theta1)
        .def_readonly("theta2", &kin::JointAngles::theta2)
        .def_readonly("theta3", &kin::JointAngles::theta3)
        .def_readonly("singular", &kin::JointAngles::singular)
        .def_readonly("out_of_limits", &kin::JointAngles::out_of_limits)
        .def_readonly("reprojected", &kin::JointAngles::reprojected)
        .def("as_tuple", [](const kin::JointAngles& q) { return py::make_tuple(q.theta1, q.theta2, q.theta3); })
        .def("__repr__", [](const kin::JointAngles& q) {
            return "JointAngles(" + std::to_string(q.theta1) + ", " + std::to_string(q.theta2) + ", " +
                   std::to_string(q.theta3) + (q.singular ? ", singular" : "") + ")";
        });

    m.def(
        "dh_transform",
        [](double alpha, double d, double theta, double r) {
            kin::DHRow row{0, alpha, d, 0.0, true, r};
            const auto t = kin::dh_transform(row, theta);
            return py::make_tuple(t.rotation, t.translation);
        },
        py::arg("alpha"), py::arg("d"), py::arg("theta"), py::arg("r") = 0.0,
        "Rot(x, alpha) Trans(x, d) Rot(z, theta) Trans(z, r) as (rotation, translation).");

    m.def(
        "forward_kinematics",
        [](const std::array<double, 3>& q, double d3, double d4) {
            const auto fk = kin::forward_kinematics(kin::ArmGeometry::make(d3, d4), angles_of(q));
            return py::make_tuple(fk.elbow, fk.wrist);
        },
        py::arg("q"), py::arg("d3") = 0.3, py::arg("d4") = 0.25, "Elbow and wrist in the shoulder frame.");

    m.def(
        "inverse_kinematics",
        [](const Vec3& elbow, const Vec3& wrist, double d3, double d4, double theta1_hold) {
            return kin::inverse_kinematics_frame(kin::ArmGeometry::make(d3, d4), elbow, wrist, theta1_hold);
        },
        py::arg("elbow"), py::arg("wrist"), py::arg("d3") = 0.3, py::arg("d4") = 0.25, py::arg("theta1_hold") = 0.0);

    m.def(
        "static_torques",
        [](const std::array<double, 3>& q, const Vec3& gravity, double d3, double d4, double upper_arm_mass,
           double forearm_mass, double payload_mass, double com_ratio_upper, double com_ratio_fore) {
            dyn::SegmentInertia in{upper_arm_mass, forearm_mass, com_ratio_upper, com_ratio_fore, payload_mass};
            in.validate();
            return dyn::static_torques(kin::ArmGeometry::make(d3, d4), in, angles_of(q), gravity);
        },
        py::arg("q"), py::arg("gravity") = Vec3(0.0, -9.81, 0.0), py::arg("d3") = 0.3, py::arg("d4") = 0.25,
        py::arg("upper_arm_mass") = 2.0, py::arg("forearm_mass") = 1.5, py::arg("payload_mass") = 0.0,
        py::arg("com_ratio_upper") = 0.5, py::arg("com_ratio_fore") = 0.5, "Holding torques (tau1, tau2, tau3).");

    m.def(
        "integrate_capacity",
        [](const std::vector<double>& times_s, const std::vector<double>& f, double dt_min, double mvc, double k,
           std::optional<double> initial) {
            const auto c = fatigue::integrate_capacity({mvc, k, initial}, load_of(times_s, f), dt_min);
            return py::make_tuple(c.times_min, c.capacity, c.normalized);
        },
        py::arg("times_s"), py::arg("f"), py::arg("dt_min"), py::arg("mvc") = 100.0, py::arg("k") = 1.0,
        py::arg("initial_capacity") = py::none(),
        "RK4 capacity over a load profile: (times_min, F_cem, F_cem / MVC).");

    m.def(
        "capacity_closed_form",
        [](double f, double t_min, double mvc, double k) { return fatigue::capacity_closed_form({mvc, k, {}}, f, t_min); },
        py::arg("f"), py::arg("t_min"), py::arg("mvc") = 100.0, py::arg("k") = 1.0);

    m.def(
        "endurance_time",
        [](double f, double k, double mvc) { return fatigue::endurance_time({mvc, k, {}}, f); }, py::arg("f"),
        py::arg("k") = 1.0, py::arg("mvc") = 100.0, "Minutes until capacity falls to the constant load f.");

    m.def(
        "parse_capture_csv",
        [](const std::filesystem::path& path, const std::string& units) {
            const auto cap = mocap::parse_capture_csv(path, mocap::parse_units(units));
            py::list frames, times, rows;
            for (const auto& r : cap.rows) {
                frames.append(r.frame);
                times.append(r.time);
                py::list values;
                for (const auto& v : r.values) values.append(v ? py::cast(*v) : py::none());
                rows.append(values);
            }
            py::dict out;
            out["columns"] = cap.column_labels;
            out["markers"] = cap.marker_labels();
            out["frames"] = frames;
            out["times"] = times;
            out["values"] = rows;
            return out;
        },
        py::arg("path"), py::arg("units") = "mm", "Capture CSV with positions converted to meters.");

    m.def(
        "generate_synthetic",
        [](const std::string& spec_json, const std::filesystem::path& out) {
            const auto gen = synth::generate_synthetic(synth::MotionSpec::from_json_text(spec_json), out);
            return gen.tracker_map.to_json_text();
        },
        py::arg("spec_json"), py::arg("out"), "Writes a capture CSV; returns the tracker map JSON text.");

    m.def(
        "run_pipeline",
        [](const std::filesystem::path& config, const std::filesystem::path& capture, const std::filesystem::path& out) {
            return pipeline::run_pipeline(pipeline::PipelineConfig::load(config), capture, out).dump();
        },
        py::arg("config"), py::arg("capture"), py::arg("out"), "Runs every stage; returns the report as JSON text.");

    py::class_<replay::World>(m, "World")
        .def(py::init<>())
        .def_readwrite("gravity", &replay::World::gravity)
        .def_readwrite("dt", &replay::World::dt)
        .def_readwrite("solver_iterations", &replay::World::solver_iterations)
        .def_readwrite("baumgarte_beta", &replay::World::baumgarte_beta)
        .def_static("from_json", &replay::World::from_json_text, py::arg("text"))
        .def(
            "add_sphere",
            [](replay::World& w, const std::string& name, double radius, const Vec3& position, double mass,
               bool kinematic, const Vec3& velocity) {
                replay::RigidBody b;
                b.name = name;
                b.kind = kinematic ? replay::BodyKind::Kinematic : replay::BodyKind::Dynamic;
                b.mass = kinematic ? 0.0 : mass;
                b.shape = replay::Sphere{radius};
                b.position = position;
                b.linear_velocity = velocity;
                return w.add_body(b);
            },
            py::arg("name"), py::arg("radius"), py::arg("position"), py::arg("mass") = 1.0, py::arg("kinematic") = false,
            py::arg("velocity") = Vec3::Zero())
        .def(
            "add_half_space",
            [](replay::World& w, const std::string& name, const Vec3& normal, double offset) {
                replay::RigidBody b;
                b.name = name;
                b.kind = replay::BodyKind::Kinematic;
                b.mass = 0.0;
                b.shape = replay::HalfSpace{normal, offset};
                return w.add_body(b);
            },
            py::arg("name"), py::arg("normal") = Vec3::UnitZ(), py::arg("offset") = 0.0)
        .def("ball_socket",
             [](replay::World& w, std::size_t a, std::size_t b, const Vec3& anchor_a, const Vec3& anchor_b) {
                 return w.add_constraint({a, b, anchor_a, anchor_b});
             },
             py::arg("body_a"), py::arg("body_b"), py::arg("anchor_a") = Vec3::Zero(), py::arg("anchor_b") = Vec3::Zero())
        .def("step", [](replay::World& w, std::size_t n) {
                 for (std::size_t i = 0; i < n; ++i) w.step();
             }, py::arg("n") = 1)
        .def("position", [](const replay::World& w, std::size_t i) { return w.body(i).position; })
        .def("velocity", [](const replay::World& w, std::size_t i) { return w.body(i).linear_velocity; })
        .def("anchor_separation", &replay::World::anchor_separation)
        .def("__len__", [](const replay::World& w) { return w.bodies().size(); });
}
