#include "ergo/replay.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ergo/csv.hpp"
#include "ergo/error.hpp"

namespace ergo::replay {

namespace {

constexpr double kGridTolerance = 1e-9;

struct Aabb {
    Vec3 lo;
    Vec3 hi;

    bool overlaps(const Aabb& o) const {
        return (lo.array() <= o.hi.array()).all() && (o.lo.array() <= hi.array()).all();
    }
};

Aabb bounds(const RigidBody& b) {
    if (const auto* s = std::get_if<Sphere>(&b.shape)) {
        const Vec3 r = Vec3::Constant(s->radius);
        return {b.position - r, b.position + r};
    }
    const double inf = std::numeric_limits<double>::infinity();
    return {Vec3::Constant(-inf), Vec3::Constant(inf)};
}

// Half-space plane in world coordinates.
std::pair<Vec3, double> world_plane(const RigidBody& b, const HalfSpace& h) {
    const Vec3 n = b.orientation * h.normal;
    return {n, h.offset + n.dot(b.position)};
}

Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

Vec3 to_vec3(const nlohmann::json& j) {
    const auto a = j.get<std::array<double, 3>>();
    return {a[0], a[1], a[2]};
}

bool state_finite(const RigidBody& b) {
    return b.position.allFinite() && b.linear_velocity.allFinite() && b.angular_velocity.allFinite() &&
           b.orientation.coeffs().allFinite();
}

}  // namespace

double RigidBody::inverse_inertia() const {
    if (kind != BodyKind::Dynamic) return 0.0;
    if (const auto* s = std::get_if<Sphere>(&shape)) return 1.0 / (0.4 * mass * s->radius * s->radius);
    return 0.0;
}

std::size_t World::add_body(RigidBody body) {
    if (body.kind == BodyKind::Dynamic && !(body.mass > 0.0)) {
        throw Error(ErrorKind::Parameter, "body '" + body.name + "': dynamic bodies need mass > 0");
    }
    if (std::holds_alternative<HalfSpace>(body.shape) && body.kind == BodyKind::Dynamic) {
        throw Error(ErrorKind::Parameter, "body '" + body.name + "': half-spaces must be kinematic");
    }
    if (const auto* s = std::get_if<Sphere>(&body.shape); s && !(s->radius > 0.0)) {
        throw Error(ErrorKind::Parameter, "body '" + body.name + "': sphere radius must be > 0");
    }
    if (auto* h = std::get_if<HalfSpace>(&body.shape)) {
        if (!(h->normal.norm() > 0.0)) throw Error(ErrorKind::Parameter, "half-space normal must be non-zero");
        h->normal.normalize();
    }
    body.orientation.normalize();
    bodies_.push_back(std::move(body));
    return bodies_.size() - 1;
}

std::size_t World::add_constraint(const BallSocketConstraint& constraint) {
    if (constraint.body_a >= bodies_.size() || constraint.body_b >= bodies_.size() ||
        constraint.body_a == constraint.body_b) {
        throw Error(ErrorKind::Lookup, "ball-socket constraint references an invalid body pair");
    }
    constraints_.push_back(constraint);
    return constraints_.size() - 1;
}

RigidBody& World::body(std::size_t index) {
    if (index >= bodies_.size()) throw Error(ErrorKind::Lookup, "no body with index " + std::to_string(index));
    return bodies_[index];
}

const RigidBody& World::body(std::size_t index) const {
    if (index >= bodies_.size()) throw Error(ErrorKind::Lookup, "no body with index " + std::to_string(index));
    return bodies_[index];
}

std::optional<std::size_t> World::find_body(const std::string& name) const {
    for (std::size_t i = 0; i < bodies_.size(); ++i) {
        if (bodies_[i].name == name) return i;
    }
    return std::nullopt;
}

void World::validate() const {
    if (!(dt > 0.0)) throw Error(ErrorKind::Parameter, "world dt must be > 0");
    if (solver_iterations < 1) throw Error(ErrorKind::Parameter, "solver_iterations must be >= 1");
    if (!(baumgarte_beta >= 0.0 && baumgarte_beta <= 1.0)) {
        throw Error(ErrorKind::Parameter, "baumgarte_beta must lie in [0, 1]");
    }
}

Vec3 World::world_anchor_a(std::size_t c) const {
    const auto& con = constraints_.at(c);
    const auto& a = bodies_[con.body_a];
    return a.position + a.orientation * con.anchor_a;
}

Vec3 World::world_anchor_b(std::size_t c) const {
    const auto& con = constraints_.at(c);
    const auto& b = bodies_[con.body_b];
    return b.position + b.orientation * con.anchor_b;
}

double World::anchor_separation(std::size_t c) const { return (world_anchor_b(c) - world_anchor_a(c)).norm(); }

std::optional<std::size_t> World::payload_of(std::size_t wrist) const {
    for (const auto& [w, p] : payloads_) {
        if (w == wrist) return p;
    }
    return std::nullopt;
}

void World::set_kinematic_target(std::size_t index, const Pose& target) {
    auto& b = body(index);
    if (b.kind != BodyKind::Kinematic) {
        throw Error(ErrorKind::State, "body '" + b.name + "' is not kinematic");
    }
    b.linear_velocity = (target.position - b.position) / dt;
    Quat delta = target.orientation.normalized() * b.orientation.conjugate();
    if (delta.w() < 0.0) delta.coeffs() = -delta.coeffs();
    const Eigen::AngleAxisd aa(delta);
    b.angular_velocity = aa.angle() == 0.0 ? Vec3::Zero() : Vec3(aa.axis() * (aa.angle() / dt));
}

void World::step() {
    validate();
    const std::size_t n = bodies_.size();
    last_step_ = {};

    // 1. gravity
    for (auto& b : bodies_) {
        if (b.kind == BodyKind::Dynamic) b.linear_velocity += gravity * dt;
    }

    // 2. broadphase
    auto linked = [this](std::size_t i, std::size_t j) {
        for (const auto& c : constraints_) {
            if ((c.body_a == i && c.body_b == j) || (c.body_a == j && c.body_b == i)) return true;
        }
        return false;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& a = bodies_[i];
            const auto& b = bodies_[j];
            if (a.kind != BodyKind::Dynamic && b.kind != BodyKind::Dynamic) continue;
            if (linked(i, j)) continue;
            if (bounds(a).overlaps(bounds(b))) last_step_.broadphase_pairs.emplace_back(i, j);
        }
    }

    // 3. narrowphase
    for (auto [i, j] : last_step_.broadphase_pairs) {
        const auto& a = bodies_[i];
        const auto& b = bodies_[j];
        const auto* sa = std::get_if<Sphere>(&a.shape);
        const auto* sb = std::get_if<Sphere>(&b.shape);
        if (sa && sb) {
            const Vec3 d = b.position - a.position;
            const double dist = d.norm();
            const double pen = sa->radius + sb->radius - dist;
            if (pen < 0.0) continue;
            const Vec3 normal = dist > 0.0 ? Vec3(d / dist) : Vec3::UnitZ();
            last_step_.contacts.push_back({i, j, a.position + normal * (sa->radius - 0.5 * pen), normal, pen});
        } else if (sa || sb) {
            // orient the pair as (half-space, sphere)
            const std::size_t hi = sa ? j : i;
            const std::size_t si = sa ? i : j;
            const auto& hb = bodies_[hi];
            const auto& sp = bodies_[si];
            const auto [normal, offset] = world_plane(hb, std::get<HalfSpace>(hb.shape));
            const double radius = std::get<Sphere>(sp.shape).radius;
            const double pen = radius - (normal.dot(sp.position) - offset);
            if (pen < 0.0) continue;
            last_step_.contacts.push_back({hi, si, sp.position - normal * radius, normal, pen});
        }
    }

    // 4. velocity solve
    const double bias_rate = baumgarte_beta / dt;
    std::vector<double> contact_impulse(last_step_.contacts.size(), 0.0);
    last_step_.constraint_impulses.assign(constraints_.size(), Vec3::Zero());
    for (int iter = 0; iter < solver_iterations; ++iter) {
        for (std::size_t c = 0; c < last_step_.contacts.size(); ++c) {
            const auto& ct = last_step_.contacts[c];
            auto& a = bodies_[ct.body_a];
            auto& b = bodies_[ct.body_b];
            const Vec3 ra = ct.point - a.position;
            const Vec3 rb = ct.point - b.position;
            const double ima = a.inverse_mass(), imb = b.inverse_mass();
            const double iia = a.inverse_inertia(), iib = b.inverse_inertia();
            const double k = ima + imb + iia * ra.cross(ct.normal).squaredNorm() +
                             iib * rb.cross(ct.normal).squaredNorm();
            if (k == 0.0) continue;
            const Vec3 vrel = b.linear_velocity + b.angular_velocity.cross(rb) - a.linear_velocity -
                              a.angular_velocity.cross(ra);
            const double vn = vrel.dot(ct.normal);
            const double target = bias_rate * ct.penetration;
            const double accumulated = std::max(contact_impulse[c] + (target - vn) / k, 0.0);
            const double delta = accumulated - contact_impulse[c];
            contact_impulse[c] = accumulated;
            const Vec3 p = delta * ct.normal;
            a.linear_velocity -= ima * p;
            a.angular_velocity -= iia * ra.cross(p);
            b.linear_velocity += imb * p;
            b.angular_velocity += iib * rb.cross(p);
        }
        for (std::size_t c = 0; c < constraints_.size(); ++c) {
            const auto& con = constraints_[c];
            auto& a = bodies_[con.body_a];
            auto& b = bodies_[con.body_b];
            const double ima = a.inverse_mass(), imb = b.inverse_mass();
            const double iia = a.inverse_inertia(), iib = b.inverse_inertia();
            if (ima + imb == 0.0) continue;
            const Vec3 ra = a.orientation * con.anchor_a;
            const Vec3 rb = b.orientation * con.anchor_b;
            const Vec3 error = (b.position + rb) - (a.position + ra);
            const Mat3 sa = skew(ra), sb = skew(rb);
            const Mat3 k = (ima + imb) * Mat3::Identity() - iia * sa * sa - iib * sb * sb;
            const Vec3 vrel = b.linear_velocity + b.angular_velocity.cross(rb) - a.linear_velocity -
                              a.angular_velocity.cross(ra);
            const Vec3 p = k.ldlt().solve(-bias_rate * error - vrel);
            a.linear_velocity -= ima * p;
            a.angular_velocity -= iia * ra.cross(p);
            b.linear_velocity += imb * p;
            b.angular_velocity += iib * rb.cross(p);
            last_step_.constraint_impulses[c] += p;
        }
    }

    // 5. semi-implicit integration, 6. transforms
    for (auto& b : bodies_) {
        b.position += b.linear_velocity * dt;
        const double rate = b.angular_velocity.norm();
        if (rate > 0.0) {
            const Quat spin(Eigen::AngleAxisd(rate * dt, b.angular_velocity / rate));
            b.orientation = spin * b.orientation;
        }
        b.orientation.normalize();
        if (!state_finite(b)) {
            throw Error(ErrorKind::Diverged, "simulation diverged: body '" + b.name + "' has a non-finite state");
        }
    }
}

World step(World world) {
    world.step();
    return world;
}

World World::from_json_text(const std::string& text) {
    World world;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.contains("gravity")) world.gravity = to_vec3(j.at("gravity"));
        world.dt = j.value("dt", world.dt);
        world.solver_iterations = j.value("solver_iterations", world.solver_iterations);
        world.baumgarte_beta = j.value("baumgarte_beta", world.baumgarte_beta);
        world.validate();
        for (const auto& jb : j.at("bodies")) {
            RigidBody b;
            b.name = jb.value("name", "body" + std::to_string(world.bodies_.size()));
            const auto kind = jb.value("kind", std::string("dynamic"));
            if (kind == "dynamic") b.kind = BodyKind::Dynamic;
            else if (kind == "kinematic") b.kind = BodyKind::Kinematic;
            else throw Error(ErrorKind::Format, "scene: unknown body kind '" + kind + "'");
            b.mass = jb.value("mass", b.kind == BodyKind::Dynamic ? 1.0 : 0.0);
            const auto& js = jb.at("shape");
            const auto type = js.at("type").get<std::string>();
            if (type == "sphere") b.shape = Sphere{js.at("radius").get<double>()};
            else if (type == "half_space") b.shape = HalfSpace{to_vec3(js.at("normal")), js.value("offset", 0.0)};
            else throw Error(ErrorKind::Format, "scene: unknown shape '" + type + "'");
            if (jb.contains("position")) b.position = to_vec3(jb.at("position"));
            if (jb.contains("orientation")) {
                const auto q = jb.at("orientation").get<std::array<double, 4>>();
                b.orientation = Quat(q[0], q[1], q[2], q[3]);
            }
            if (jb.contains("linear_velocity")) b.linear_velocity = to_vec3(jb.at("linear_velocity"));
            if (jb.contains("angular_velocity")) b.angular_velocity = to_vec3(jb.at("angular_velocity"));
            world.add_body(std::move(b));
        }
        auto body_ref = [&world](const nlohmann::json& r) -> std::size_t {
            if (r.is_string()) {
                const auto name = r.get<std::string>();
                if (auto idx = world.find_body(name)) return *idx;
                throw Error(ErrorKind::Lookup, "scene: unknown body '" + name + "'");
            }
            return r.get<std::size_t>();
        };
        if (j.contains("constraints")) {
            for (const auto& jc : j.at("constraints")) {
                BallSocketConstraint c;
                c.body_a = body_ref(jc.at("body_a"));
                c.body_b = body_ref(jc.at("body_b"));
                if (jc.contains("anchor_a")) c.anchor_a = to_vec3(jc.at("anchor_a"));
                if (jc.contains("anchor_b")) c.anchor_b = to_vec3(jc.at("anchor_b"));
                world.add_constraint(c);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("scene: ") + e.what());
    }
    return world;
}

World World::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open scene " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

void TransformLog::append(std::size_t step, const World& world) {
    for (std::size_t i = 0; i < world.bodies().size(); ++i) {
        const auto& b = world.bodies()[i];
        records.push_back({step, i, b.position, b.orientation});
    }
}

void TransformLog::write_csv(const std::filesystem::path& path) const {
    csv::Table table;
    table.header = {"step", "body_id", "px", "py", "pz", "qw", "qx", "qy", "qz"};
    table.rows.reserve(records.size());
    for (const auto& r : records) {
        table.rows.push_back({std::to_string(r.step), std::to_string(r.body_id), csv::format_number(r.position.x()),
                              csv::format_number(r.position.y()), csv::format_number(r.position.z()),
                              csv::format_number(r.orientation.w()), csv::format_number(r.orientation.x()),
                              csv::format_number(r.orientation.y()), csv::format_number(r.orientation.z())});
    }
    try {
        csv::write_table(path, table);
    } catch (const Error& e) {
        throw Error(ErrorKind::Io, std::string("transform log: ") + e.what());
    }
}

void drive_kinematic(World& world, const std::vector<KinematicTrack>& tracks, TransformLog* log) {
    if (tracks.empty()) return;
    const std::size_t n = tracks.front().poses.size();
    for (const auto& track : tracks) {
        if (track.poses.size() != n || track.times.size() != n) {
            throw Error(ErrorKind::Alignment, "drive_kinematic: tracks must share one time grid");
        }
        for (std::size_t i = 1; i < n; ++i) {
            if (std::abs((track.times[i] - track.times[i - 1]) - world.dt) > kGridTolerance) {
                throw Error(ErrorKind::Alignment, "drive_kinematic: pose grid spacing differs from world dt at sample " +
                                                      std::to_string(i));
            }
        }
        if (world.body(track.body).kind != BodyKind::Kinematic) {
            throw Error(ErrorKind::State, "drive_kinematic: body '" + world.body(track.body).name + "' is not kinematic");
        }
    }
    for (std::size_t i = 1; i < n; ++i) {
        for (const auto& track : tracks) world.set_kinematic_target(track.body, track.poses[i]);
        world.step();
        if (log) log->append(i, world);
    }
}

std::size_t attach_payload(World& world, std::size_t wrist_body, RigidBody payload) {
    world.body(wrist_body);
    if (payload.kind != BodyKind::Dynamic || !(payload.mass > 0.0)) {
        throw Error(ErrorKind::Parameter, "attach_payload: payload must be dynamic with mass > 0");
    }
    if (world.payload_of(wrist_body)) {
        throw Error(ErrorKind::State, "attach_payload: wrist body already carries a payload");
    }
    const std::size_t index = world.add_body(std::move(payload));
    world.add_constraint({wrist_body, index, Vec3::Zero(), Vec3::Zero()});
    world.payloads_.emplace_back(wrist_body, index);
    return index;
}

TransformLog export_transforms(World& world, std::size_t steps) {
    TransformLog log;
    log.records.reserve(steps * world.bodies().size());
    for (std::size_t s = 1; s <= steps; ++s) {
        world.step();
        log.append(s, world);
    }
    return log;
}

}  // namespace ergo::replay
