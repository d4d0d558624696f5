#include "sbc/reference.hpp"

#include <cmath>
#include <limits>

#include "sbc/errors.hpp"

namespace sbc {
namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

Eigen::Vector3d de_casteljau(const std::array<Eigen::Vector3d, 10>& points, int count, double x) {
    std::array<Eigen::Vector3d, 10> scratch;
    std::copy(points.begin(), points.begin() + count, scratch.begin());
    for (int level = count - 1; level > 0; --level) {
        for (int i = 0; i < level; ++i)
            scratch[static_cast<std::size_t>(i)] =
                (1.0 - x) * scratch[static_cast<std::size_t>(i)] +
                x * scratch[static_cast<std::size_t>(i + 1)];
    }
    return scratch[0];
}

}  // namespace

FlatSample HoverRef::eval(double) const {
    FlatSample s;
    s.r = point_;
    return s;
}

double HoverRef::duration() const { return kInfinity; }

CircleRef::CircleRef(double radius, double angular_rate, double phase, double z,
                     const Eigen::Vector2d& center)
    : radius_(radius), rate_(angular_rate), phase_(phase), center_(center.x(), center.y(), z) {
    if (!(radius >= 0.0) || !std::isfinite(radius))
        throw ValidationError("circle radius must be non-negative");
    if (!std::isfinite(angular_rate) || !std::isfinite(phase) || !std::isfinite(z) ||
        !center.allFinite())
        throw ValidationError("circle parameters must be finite");
}

FlatSample CircleRef::eval(double u) const {
    const double a = rate_ * u + phase_;
    const double c = std::cos(a);
    const double s = std::sin(a);
    FlatSample out;
    out.r = center_ + radius_ * Eigen::Vector3d(c, s, 0.0);
    out.dr = radius_ * rate_ * Eigen::Vector3d(-s, c, 0.0);
    out.ddr = radius_ * rate_ * rate_ * Eigen::Vector3d(-c, -s, 0.0);
    out.dddr = radius_ * rate_ * rate_ * rate_ * Eigen::Vector3d(s, -c, 0.0);
    out.ddddr = radius_ * rate_ * rate_ * rate_ * rate_ * Eigen::Vector3d(c, s, 0.0);
    return out;
}

double CircleRef::duration() const { return kInfinity; }

BezierRef::BezierRef(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1, double T) : T_(T) {
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("bezier duration T must be positive");
    if (!p0.allFinite() || !p1.allFinite())
        throw ValidationError("bezier endpoints must be finite");

    auto& base = diff_points_[0];
    for (int i = 0; i < 5; ++i) base[static_cast<std::size_t>(i)] = p0;
    for (int i = 5; i < 10; ++i) base[static_cast<std::size_t>(i)] = p1;
    for (int order = 1; order <= 4; ++order) {
        const int count = 10 - order;
        const double scale = static_cast<double>(10 - order);
        for (int i = 0; i < count; ++i)
            diff_points_[static_cast<std::size_t>(order)][static_cast<std::size_t>(i)] =
                scale * (diff_points_[static_cast<std::size_t>(order - 1)][static_cast<std::size_t>(i + 1)] -
                         diff_points_[static_cast<std::size_t>(order - 1)][static_cast<std::size_t>(i)]);
    }
}

FlatSample BezierRef::eval(double u) const {
    FlatSample out;
    if (u <= 0.0) {
        out.r = diff_points_[0][0];
        return out;
    }
    if (u >= T_) {
        out.r = diff_points_[0][9];
        return out;
    }
    const double x = u / T_;
    double time_scale = 1.0;
    Eigen::Vector3d* fields[5] = {&out.r, &out.dr, &out.ddr, &out.dddr, &out.ddddr};
    for (int order = 0; order <= 4; ++order) {
        *fields[order] = time_scale * de_casteljau(diff_points_[static_cast<std::size_t>(order)],
                                                   10 - order, x);
        time_scale /= T_;
    }
    return out;
}

double BezierRef::duration() const { return T_; }

std::unique_ptr<ReferenceTrajectory> bezier_interp(const Eigen::Vector3d& p0,
                                                   const Eigen::Vector3d& p1, double T) {
    return std::make_unique<BezierRef>(p0, p1, T);
}

std::unique_ptr<ReferenceTrajectory> circle_ref(double radius, double angular_rate, double phase,
                                                double z, const Eigen::Vector2d& center) {
    return std::make_unique<CircleRef>(radius, angular_rate, phase, z, center);
}

std::unique_ptr<ReferenceTrajectory> hover_ref(const Eigen::Vector3d& point) {
    return std::make_unique<HoverRef>(point);
}

VirtualClock clock_step(const VirtualClock& clock, const Eigen::Vector3d& e_r, double dt) {
    if (!(dt > 0.0)) throw ValidationError("clock_step needs dt > 0");
    if (!(clock.k_s >= 0.0)) throw ValidationError("parameterization gain k_s must be non-negative");
    if (!e_r.allFinite()) throw ValidationError("tracking error must be finite");

    VirtualClock next = clock;
    next.ds = std::exp(-clock.k_s * e_r.squaredNorm());
    next.s = clock.s + dt * next.ds;
    return next;
}

FlatSample eval_parameterized(const ReferenceTrajectory& traj, const VirtualClock& clock) {
    FlatSample s = traj.eval(clock.s);
    const double ds = clock.ds;
    s.dr *= ds;
    s.ddr *= ds * ds;
    s.dddr *= ds * ds * ds;
    s.ddddr *= ds * ds * ds * ds;
    return s;
}

}  // namespace sbc
