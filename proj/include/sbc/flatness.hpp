#pragma once

#include <vector>

#include <Eigen/Core>

namespace sbc {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

constexpr double radians(double degrees) { return degrees * kPi / 180.0; }
constexpr double degrees(double rad) { return rad * 180.0 / kPi; }

// Position derivatives up to snap for one vehicle at one instant, in the
// world frame of the owning scenario. Yaw rides along so trace records can
// show the pinned heading explicitly.
struct FlatSample {
    Eigen::Vector3d r = Eigen::Vector3d::Zero();
    Eigen::Vector3d dr = Eigen::Vector3d::Zero();
    Eigen::Vector3d ddr = Eigen::Vector3d::Zero();
    Eigen::Vector3d dddr = Eigen::Vector3d::Zero();
    Eigen::Vector3d ddddr = Eigen::Vector3d::Zero();
    double yaw = 0.0;

    void validate() const;
};

struct VehicleParams {
    double mass = 0.033;
    Eigen::Matrix3d inertia =
        Eigen::Vector3d(1.4e-5, 1.4e-5, 2.2e-5).asDiagonal();
    double gravity = 9.81;
    // World vertical convention of the kinematic inputs. The default
    // (false) is a z-down world where gravity points along +z and flight
    // altitudes are negative; set true for z-up inputs.
    bool world_z_up = false;

    void validate() const;
};

// Attitude and body rates recovered from the flat outputs. The rotation
// and Euler angles are expressed in a canonical z-up frame regardless of
// the input convention, so hover reads as roll = pitch = 0.
struct FullState {
    Eigen::Vector3d r = Eigen::Vector3d::Zero();
    Eigen::Vector3d dr = Eigen::Vector3d::Zero();
    Eigen::Matrix3d attitude = Eigen::Matrix3d::Identity();  // [x_b y_b z_b]
    double roll = 0.0;   // Z-Y-X Euler, radians
    double pitch = 0.0;
    double yaw = 0.0;
    double tilt = 0.0;  // angle between z_b and the vertical
    Eigen::Vector3d omega = Eigen::Vector3d::Zero();  // body rates p,q,r
    bool gimbal_warning = false;  // |pitch| beyond 85 degrees

    void require_valid() const;  // attitude orthonormal, non-inverted
};

struct ControlInput {
    double f_z = 0.0;  // collective thrust, N
    Eigen::Vector3d omega_dot = Eigen::Vector3d::Zero();
    Eigen::Vector3d torque = Eigen::Vector3d::Zero();
};

FullState flat_to_state(const FlatSample& s, const VehicleParams& params);
ControlInput flat_to_input(const FlatSample& s, const VehicleParams& params);

struct ActuatorLimits {
    double max_tilt = radians(40.0);
    double max_thrust_ratio = 1.6;

    void validate() const;
};

struct AuditReport {
    int sample_count = 0;
    double max_tilt = 0.0;
    int max_tilt_index = -1;
    double max_tilt_time = 0.0;
    double max_thrust_ratio = 0.0;
    int max_thrust_ratio_index = -1;
    double max_thrust_ratio_time = 0.0;
    double max_torque = 0.0;
    int max_torque_index = -1;
    int singular_index = -1;  // first sample where the transform broke down
    bool pass = false;
};

// Sweeps a uniformly sampled flat trace through the endogenous transform
// and reports actuator extremes against the limits. A singular sample
// fails the audit rather than aborting it.
AuditReport actuator_audit(const std::vector<FlatSample>& trace, const VehicleParams& params,
                           const ActuatorLimits& limits, double dt);

}  // namespace sbc
