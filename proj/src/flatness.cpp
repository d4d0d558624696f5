#include "sbc/flatness.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "sbc/errors.hpp"

namespace sbc {
namespace {

constexpr double kFreefallFraction = 1e-3;   // of g, below which z_b is undefined
constexpr double kHeadingLockEps = 1e-9;     // |z_b x x_c| floor
constexpr double kGimbalWarnPitch = radians(85.0);

Eigen::Vector3d vee(const Eigen::Matrix3d& m) {
    const Eigen::Matrix3d s = 0.5 * (m - m.transpose());
    return {s(2, 1), s(0, 2), s(1, 0)};
}

// Body frame and its first two time derivatives in the canonical z-up
// world. Thrust points along +z_b; with yaw pinned to zero the frame is
// the usual z_b / x_c cross-product construction.
struct BodyFrame {
    Eigen::Matrix3d r;
    Eigen::Matrix3d dr;
    Eigen::Matrix3d ddr;
    double thrust_accel = 0.0;  // |ddr + g z|, f_z / m
};

Eigen::Vector3d canonical(const Eigen::Vector3d& v, const VehicleParams& params) {
    if (params.world_z_up) return v;
    return {v.x(), -v.y(), -v.z()};
}

BodyFrame body_frame(const FlatSample& s, const VehicleParams& params) {
    const Eigen::Vector3d a = canonical(s.ddr, params);
    const Eigen::Vector3d j = canonical(s.dddr, params);
    const Eigen::Vector3d snap = canonical(s.ddddr, params);

    const Eigen::Vector3d t = a + params.gravity * Eigen::Vector3d::UnitZ();
    const double f = t.norm();
    if (f <= kFreefallFraction * params.gravity)
        throw SingularityError("thrust vector vanishes (free fall): body attitude undefined");

    const Eigen::Vector3d zb = t / f;
    const double fd = zb.dot(j);
    const Eigen::Vector3d zb_d = (j - fd * zb) / f;
    const double fdd = (j.squaredNorm() + t.dot(snap) - fd * fd) / f;
    const Eigen::Vector3d zb_dd = (snap - fdd * zb - 2.0 * fd * zb_d) / f;

    const Eigen::Vector3d xc = Eigen::Vector3d::UnitX();
    const Eigen::Vector3d u = zb.cross(xc);
    const Eigen::Vector3d u_d = zb_d.cross(xc);
    const Eigen::Vector3d u_dd = zb_dd.cross(xc);
    const double n = u.norm();
    if (n <= kHeadingLockEps)
        throw SingularityError("body z parallel to heading reference: attitude undefined");

    const Eigen::Vector3d yb = u / n;
    const double nd = yb.dot(u_d);
    const Eigen::Vector3d yb_d = (u_d - nd * yb) / n;
    const double ndd = (u_d.squaredNorm() + u.dot(u_dd) - nd * nd) / n;
    const Eigen::Vector3d yb_dd = (u_dd - ndd * yb - 2.0 * nd * yb_d) / n;

    const Eigen::Vector3d xb = yb.cross(zb);
    const Eigen::Vector3d xb_d = yb_d.cross(zb) + yb.cross(zb_d);
    const Eigen::Vector3d xb_dd = yb_dd.cross(zb) + 2.0 * yb_d.cross(zb_d) + yb.cross(zb_dd);

    BodyFrame out;
    out.r.col(0) = xb;
    out.r.col(1) = yb;
    out.r.col(2) = zb;
    out.dr.col(0) = xb_d;
    out.dr.col(1) = yb_d;
    out.dr.col(2) = zb_d;
    out.ddr.col(0) = xb_dd;
    out.ddr.col(1) = yb_dd;
    out.ddr.col(2) = zb_dd;
    out.thrust_accel = f;
    return out;
}

double clamped_asin(double x) { return std::asin(std::clamp(x, -1.0, 1.0)); }
double clamped_acos(double x) { return std::acos(std::clamp(x, -1.0, 1.0)); }

}  // namespace

void FlatSample::validate() const {
    if (!r.allFinite() || !dr.allFinite() || !ddr.allFinite() || !dddr.allFinite() ||
        !ddddr.allFinite())
        throw ValidationError("flat sample has non-finite derivatives");
    if (yaw != 0.0) throw ValidationError("yaw is pinned to zero");
}

void VehicleParams::validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass)) throw ValidationError("vehicle.mass must be positive");
    if (!(gravity > 0.0) || !std::isfinite(gravity))
        throw ValidationError("vehicle.gravity must be positive");
    if (!inertia.allFinite() || (inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError("vehicle.inertia must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(inertia);
    if (eig.eigenvalues().minCoeff() <= 0.0)
        throw ValidationError("vehicle.inertia must be positive definite");
}

void ActuatorLimits::validate() const {
    if (!(max_tilt > 0.0) || max_tilt >= kPi)
        throw ValidationError("limits.max_tilt_deg must lie in (0, 180)");
    if (!(max_thrust_ratio > 0.0) || !std::isfinite(max_thrust_ratio))
        throw ValidationError("limits.max_thrust_ratio must be positive");
}

void FullState::require_valid() const {
    if ((attitude.transpose() * attitude - Eigen::Matrix3d::Identity()).norm() > 1e-10)
        throw SingularityError("attitude lost orthonormality");
    if (std::abs(roll) >= kPi / 2 || std::abs(pitch) >= kPi / 2)
        throw SingularityError("inverted attitude outside the valid flight envelope");
}

FullState flat_to_state(const FlatSample& s, const VehicleParams& params) {
    s.validate();
    const BodyFrame frame = body_frame(s, params);

    FullState out;
    out.r = s.r;
    out.dr = s.dr;
    out.attitude = frame.r;
    out.pitch = -clamped_asin(frame.r(2, 0));
    out.roll = std::atan2(frame.r(2, 1), frame.r(2, 2));
    out.yaw = std::atan2(frame.r(1, 0), frame.r(0, 0));
    out.tilt = clamped_acos(frame.r(2, 2));
    out.omega = vee(frame.r.transpose() * frame.dr);
    out.gimbal_warning = std::abs(out.pitch) > kGimbalWarnPitch;
    return out;
}

ControlInput flat_to_input(const FlatSample& s, const VehicleParams& params) {
    s.validate();
    const BodyFrame frame = body_frame(s, params);

    ControlInput out;
    out.f_z = params.mass * frame.thrust_accel;
    const Eigen::Vector3d omega = vee(frame.r.transpose() * frame.dr);
    out.omega_dot = vee(frame.dr.transpose() * frame.dr + frame.r.transpose() * frame.ddr);
    out.torque = params.inertia * out.omega_dot + omega.cross(params.inertia * omega);
    return out;
}

AuditReport actuator_audit(const std::vector<FlatSample>& trace, const VehicleParams& params,
                           const ActuatorLimits& limits, double dt) {
    params.validate();
    limits.validate();
    if (trace.empty()) throw ValidationError("actuator audit needs a non-empty trace");
    if (!(dt > 0.0)) throw ValidationError("actuator audit needs dt > 0");

    AuditReport report;
    report.sample_count = static_cast<int>(trace.size());
    for (int k = 0; k < report.sample_count; ++k) {
        FullState state;
        ControlInput input;
        try {
            state = flat_to_state(trace[static_cast<std::size_t>(k)], params);
            input = flat_to_input(trace[static_cast<std::size_t>(k)], params);
        } catch (const SingularityError&) {
            report.singular_index = k;
            break;
        }
        if (state.tilt > report.max_tilt) {
            report.max_tilt = state.tilt;
            report.max_tilt_index = k;
            report.max_tilt_time = k * dt;
        }
        const double ratio = input.f_z / (params.mass * params.gravity);
        if (ratio > report.max_thrust_ratio) {
            report.max_thrust_ratio = ratio;
            report.max_thrust_ratio_index = k;
            report.max_thrust_ratio_time = k * dt;
        }
        const double torque = input.torque.cwiseAbs().maxCoeff();
        if (torque > report.max_torque) {
            report.max_torque = torque;
            report.max_torque_index = k;
        }
    }
    report.pass = report.singular_index < 0 && report.max_tilt <= limits.max_tilt &&
                  report.max_thrust_ratio <= limits.max_thrust_ratio;
    return report;
}

}  // namespace sbc
