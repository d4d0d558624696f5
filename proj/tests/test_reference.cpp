#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "sbc/reference.hpp"

using namespace sbc;

namespace {

// Central finite-difference check of each reported derivative against the
// one below it; validates the analytic ladder without trusting it twice.
void check_derivative_ladder(const ReferenceTrajectory& traj, double u, double tol) {
    const double tau = 1e-5;
    const FlatSample lo = traj.eval(u - tau);
    const FlatSample hi = traj.eval(u + tau);
    const FlatSample mid = traj.eval(u);
    CHECK(((hi.r - lo.r) / (2.0 * tau) - mid.dr).norm() < tol);
    CHECK(((hi.dr - lo.dr) / (2.0 * tau) - mid.ddr).norm() < tol);
    CHECK(((hi.ddr - lo.ddr) / (2.0 * tau) - mid.dddr).norm() < tol);
    CHECK(((hi.dddr - lo.dddr) / (2.0 * tau) - mid.ddddr).norm() < tol);
}

}  // namespace

TEST_CASE("hover holds the point with zero derivatives forever") {
    const Eigen::Vector3d p(0.3, -0.7, -1.2);
    const auto ref = hover_ref(p);
    for (double u : {0.0, 3.7, 1e6}) {
        const FlatSample s = ref->eval(u);
        CHECK((s.r.array() == p.array()).all());
        CHECK(s.dr.norm() == 0.0);
        CHECK(s.ddddr.norm() == 0.0);
    }
    CHECK(std::isinf(ref->duration()));
}

TEST_CASE("bezier endpoints are exact rest states") {
    const Eigen::Vector3d p0(0.0, 1.0, -0.5);
    const Eigen::Vector3d p1(2.0, -1.0, -1.5);
    const double T = 3.0;
    const auto ref = bezier_interp(p0, p1, T);
    CHECK(ref->duration() == T);

    for (double u : {0.0, T}) {
        const FlatSample s = ref->eval(u);
        const Eigen::Vector3d& expected = (u == 0.0) ? p0 : p1;
        CHECK((s.r - expected).norm() == 0.0);
        CHECK(s.dr.norm() == 0.0);
        CHECK(s.ddr.norm() == 0.0);
        CHECK(s.dddr.norm() == 0.0);
        CHECK(s.ddddr.norm() == 0.0);
    }
}

TEST_CASE("bezier clamps and holds beyond its span") {
    const Eigen::Vector3d p0(0.0, 0.0, 0.0);
    const Eigen::Vector3d p1(1.0, 2.0, 3.0);
    const auto ref = bezier_interp(p0, p1, 2.0);

    const FlatSample before = ref->eval(-1.0);
    CHECK((before.r.array() == p0.array()).all());
    CHECK(before.dr.norm() == 0.0);
    const FlatSample after = ref->eval(7.5);
    CHECK((after.r.array() == p1.array()).all());
    CHECK(after.dr.norm() == 0.0);
}

TEST_CASE("bezier midpoint position and peak speed") {
    const Eigen::Vector3d p0(0.5, 0.5, -1.0);
    const Eigen::Vector3d p1(-1.5, 2.5, -2.0);
    const double T = 4.0;
    const auto ref = bezier_interp(p0, p1, T);

    const FlatSample mid = ref->eval(T / 2.0);
    CHECK((mid.r - 0.5 * (p0 + p1)).norm() < 1e-14);
    // Symmetric degree-9 curve: speed peaks at the middle with
    // |dr| = C(8,4) / 2^8 * 9 * |p1 - p0| / T = 2.4609375 |p1 - p0| / T.
    const Eigen::Vector3d expected_dr = 2.4609375 * (p1 - p0) / T;
    CHECK((mid.dr - expected_dr).norm() < 1e-12);
}

TEST_CASE("bezier derivative ladder agrees with finite differences") {
    const auto ref = bezier_interp({0.0, 1.0, -0.5}, {2.0, -1.0, -1.5}, 3.0);
    for (double u : {0.7, 1.5, 2.2}) check_derivative_ladder(*ref, u, 1e-5);
}

TEST_CASE("circle geometry and derivative ladder") {
    const double radius = 0.8;
    const double rate = 1.3;
    const double phase = 0.4;
    const double z = -1.1;
    const Eigen::Vector2d center(0.2, -0.3);
    const auto ref = circle_ref(radius, rate, phase, z, center);
    CHECK(std::isinf(ref->duration()));

    for (double u : {0.0, 0.9, 4.2}) {
        const FlatSample s = ref->eval(u);
        CHECK((s.r.head<2>() - center).norm() == doctest::Approx(radius).epsilon(1e-13));
        CHECK(s.r.z() == z);
        // Constant-rate circle: |dr| = radius * rate, centripetal accel
        // radius * rate^2 pointing at the center.
        CHECK(s.dr.norm() == doctest::Approx(radius * rate).epsilon(1e-13));
        CHECK((s.ddr.head<2>() + rate * rate * (s.r.head<2>() - center)).norm() < 1e-13);
    }
    const FlatSample start = ref->eval(0.0);
    CHECK(start.r.x() == doctest::Approx(center.x() + radius * std::cos(phase)).epsilon(1e-15));
    CHECK(start.r.y() == doctest::Approx(center.y() + radius * std::sin(phase)).epsilon(1e-15));
    check_derivative_ladder(*ref, 2.1, 1e-6);
}

TEST_CASE("virtual clock freezes with error and runs clean without") {
    VirtualClock clock;
    clock.k_s = 100.0;

    const VirtualClock clean = clock_step(clock, Eigen::Vector3d::Zero(), 0.02);
    CHECK(clean.ds == 1.0);
    CHECK(clean.s == doctest::Approx(0.02).epsilon(1e-15));

    const VirtualClock stalled = clock_step(clock, Eigen::Vector3d(0.3, 0.0, 0.0), 0.02);
    CHECK(stalled.ds == doctest::Approx(std::exp(-100.0 * 0.09)).epsilon(1e-14));
    CHECK(stalled.s == doctest::Approx(0.02 * std::exp(-9.0)).epsilon(1e-14));
    CHECK(stalled.s < clean.s);

    // k_s = 0 ignores the error entirely.
    VirtualClock rigid;
    rigid.k_s = 0.0;
    const VirtualClock stepped = clock_step(rigid, Eigen::Vector3d(5.0, 5.0, 5.0), 0.02);
    CHECK(stepped.ds == 1.0);
}

TEST_CASE("the clock never outruns real time") {
    VirtualClock clock;
    clock.k_s = 30.0;
    double t = 0.0;
    for (int k = 0; k < 500; ++k) {
        const double wobble = 0.05 * std::sin(0.1 * k);
        const VirtualClock next = clock_step(clock, Eigen::Vector3d(wobble, 0.0, 0.0), 0.02);
        CHECK(next.s >= clock.s);  // monotone
        t += 0.02;
        CHECK(next.s <= t + 1e-12);
        clock = next;
    }
}

TEST_CASE("parameterized evaluation rescales derivatives by clock-rate powers") {
    const auto ref = circle_ref(1.0, 2.0, 0.0, -1.0);
    VirtualClock clock;
    clock.s = 0.8;
    clock.ds = 0.5;

    const FlatSample raw = ref->eval(0.8);
    const FlatSample scaled = eval_parameterized(*ref, clock);
    CHECK((scaled.r - raw.r).norm() == 0.0);
    CHECK((scaled.dr - 0.5 * raw.dr).norm() == 0.0);
    CHECK((scaled.ddr - 0.25 * raw.ddr).norm() == 0.0);
    CHECK((scaled.dddr - 0.125 * raw.dddr).norm() == 0.0);
    CHECK((scaled.ddddr - 0.0625 * raw.ddddr).norm() == 0.0);
}
