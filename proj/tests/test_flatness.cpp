#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "sbc/errors.hpp"
#include "sbc/flatness.hpp"

using namespace sbc;

TEST_CASE("hover maps to identity attitude and exact weight thrust") {
    FlatSample s;
    s.r = {0.4, -1.1, -0.8};
    VehicleParams params;

    const FullState state = flat_to_state(s, params);
    CHECK(state.tilt == 0.0);
    CHECK(state.roll == 0.0);
    CHECK(state.pitch == 0.0);
    CHECK(state.yaw == 0.0);
    CHECK((state.attitude.array() == Eigen::Matrix3d::Identity().array()).all());
    CHECK(state.omega.norm() == 0.0);
    CHECK_FALSE(state.gimbal_warning);
    state.require_valid();

    const ControlInput input = flat_to_input(s, params);
    CHECK(input.f_z == params.mass * params.gravity);
    CHECK(input.omega_dot.norm() == 0.0);
    CHECK(input.torque.norm() == 0.0);
}

TEST_CASE("a lateral acceleration of g pitches the body 45 degrees") {
    FlatSample s;
    s.ddr = {9.81, 0.0, 0.0};
    VehicleParams params;

    const FullState state = flat_to_state(s, params);
    CHECK(state.tilt == doctest::Approx(kPi / 4).epsilon(1e-14));
    CHECK(state.pitch == doctest::Approx(kPi / 4).epsilon(1e-14));
    CHECK(state.roll == doctest::Approx(0.0).epsilon(1e-14));

    const ControlInput input = flat_to_input(s, params);
    CHECK(input.f_z / (params.mass * params.gravity) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("the two vertical conventions agree on mirrored samples") {
    // The same physical climb: +1 m/s^2 upward. In the default z-down world
    // that is a negative vertical acceleration.
    FlatSample down;
    down.ddr = {0.0, 0.0, -1.0};
    VehicleParams z_down;

    FlatSample up;
    up.ddr = {0.0, 0.0, 1.0};
    VehicleParams z_up;
    z_up.world_z_up = true;

    const ControlInput a = flat_to_input(down, z_down);
    const ControlInput b = flat_to_input(up, z_up);
    CHECK(a.f_z == b.f_z);
    CHECK(a.f_z == doctest::Approx(z_down.mass * (z_down.gravity + 1.0)).epsilon(1e-15));
    CHECK(flat_to_state(down, z_down).tilt == 0.0);
    CHECK(flat_to_state(up, z_up).tilt == 0.0);
}

TEST_CASE("free fall has no defined attitude") {
    FlatSample s;
    s.ddr = {0.0, 0.0, 9.81};  // z-down world: accelerating straight down at g
    VehicleParams params;
    CHECK_THROWS_AS(flat_to_state(s, params), SingularityError);
    CHECK_THROWS_AS(flat_to_input(s, params), SingularityError);
}

TEST_CASE("thrust aligned with the heading reference is singular") {
    FlatSample s;
    s.ddr = {20.0, 0.0, 9.81};  // cancels gravity, leaves thrust along +x
    VehicleParams params;
    CHECK_THROWS_AS(flat_to_state(s, params), SingularityError);
}

TEST_CASE("near-vertical pitch raises the gimbal warning") {
    const double theta = radians(87.0);
    const Eigen::Vector3d t = 20.0 * Eigen::Vector3d(std::sin(theta), 0.0, std::cos(theta));
    FlatSample s;
    s.ddr = {t.x(), -t.y(), -(t.z() - 9.81)};
    VehicleParams params;

    const FullState state = flat_to_state(s, params);
    CHECK(state.tilt == doctest::Approx(theta).epsilon(1e-12));
    CHECK(state.pitch == doctest::Approx(theta).epsilon(1e-12));
    CHECK(state.gimbal_warning);
}

TEST_CASE("sample and parameter validation") {
    VehicleParams params;
    FlatSample s;
    s.yaw = 0.3;
    CHECK_THROWS_AS(flat_to_state(s, params), ValidationError);
    s.yaw = 0.0;
    s.ddr = {std::nan(""), 0.0, 0.0};
    CHECK_THROWS_AS(flat_to_state(s, params), ValidationError);

    params.mass = 0.0;
    CHECK_THROWS_AS(params.validate(), ValidationError);
    params.mass = 0.033;
    params.inertia(0, 1) = 1.0;  // asymmetric
    CHECK_THROWS_AS(params.validate(), ValidationError);

    ActuatorLimits limits;
    limits.max_tilt = 0.0;
    CHECK_THROWS_AS(limits.validate(), ValidationError);
}

TEST_CASE("inverted recovered attitude is rejected") {
    FullState state;
    state.roll = kPi / 2;
    CHECK_THROWS_AS(state.require_valid(), SingularityError);
}

TEST_CASE("audit of a hover trace is clean") {
    VehicleParams params;
    ActuatorLimits limits;
    std::vector<FlatSample> trace(25);
    for (std::size_t k = 0; k < trace.size(); ++k) trace[k].r = {0.0, 0.0, -0.5};

    const AuditReport report = actuator_audit(trace, params, limits, 0.02);
    CHECK(report.pass);
    CHECK(report.sample_count == 25);
    CHECK(report.max_tilt == 0.0);
    CHECK(report.max_thrust_ratio == 1.0);
    CHECK(report.singular_index == -1);
}

TEST_CASE("audit flags the extreme sample with its time") {
    VehicleParams params;
    ActuatorLimits limits;
    std::vector<FlatSample> trace(10);
    trace[6].ddr = {9.81, 0.0, 0.0};  // 45 degree pitch, sqrt(2) thrust

    const AuditReport report = actuator_audit(trace, params, limits, 0.02);
    CHECK_FALSE(report.pass);  // 45 > 40 degree tilt limit
    CHECK(report.max_tilt_index == 6);
    CHECK(report.max_tilt_time == doctest::Approx(0.12).epsilon(1e-15));
    CHECK(report.max_tilt == doctest::Approx(kPi / 4).epsilon(1e-14));
    CHECK(report.max_thrust_ratio == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(report.max_thrust_ratio_index == 6);

    ActuatorLimits generous;
    generous.max_tilt = radians(50.0);
    CHECK(actuator_audit(trace, params, generous, 0.02).pass);
}

TEST_CASE("a singular sample fails the audit without aborting it") {
    VehicleParams params;
    ActuatorLimits limits;
    std::vector<FlatSample> trace(8);
    trace[2].ddr = {9.81, 0.0, 0.0};
    trace[5].ddr = {0.0, 0.0, 9.81};  // free fall

    const AuditReport report = actuator_audit(trace, params, limits, 0.02);
    CHECK_FALSE(report.pass);
    CHECK(report.singular_index == 5);
    CHECK(report.max_tilt_index == 2);  // extremes before the breakdown survive

    CHECK_THROWS_AS(actuator_audit({}, params, limits, 0.02), ValidationError);
    CHECK_THROWS_AS(actuator_audit(trace, params, limits, 0.0), ValidationError);
}
