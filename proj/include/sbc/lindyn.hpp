#pragma once

#include <array>

#include <Eigen/Core>

namespace sbc {

// Flat state of one vehicle: position and its first three derivatives.
struct IntegratorState {
    Eigen::Vector3d r = Eigen::Vector3d::Zero();     // m
    Eigen::Vector3d dr = Eigen::Vector3d::Zero();    // m/s
    Eigen::Vector3d ddr = Eigen::Vector3d::Zero();   // m/s^2
    Eigen::Vector3d dddr = Eigen::Vector3d::Zero();  // m/s^3

    bool all_finite() const;
};

IntegratorState operator+(const IntegratorState& a, const IntegratorState& b);
IntegratorState operator*(double s, const IntegratorState& q);

// Per-axis chain matrices of the quadruple integrator. The 3-axis system is
// this pair Kronecker-lifted by I3; all operations here work per axis.
struct ChainMatrices {
    Eigen::Matrix4d f;  // nilpotent upper shift
    Eigen::Vector4d g;  // (0,0,0,1)
};

ChainMatrices chain_matrices();

// State-feedback row k applied to the stack (value, d/dt, d2/dt2, d3/dt3),
// i.e. k(0) multiplies the value. Produced by place_poles.
struct GainRow {
    Eigen::Vector4d k = Eigen::Vector4d::Zero();
    std::array<double, 4> poles{};
};

// One forward-Euler step of the quadruple integrator under snap command v.
// Every derivative order advances with the pre-step value of the next one.
IntegratorState euler_step(const IntegratorState& q, const Eigen::Vector3d& v, double dt);

// Coefficients of prod(s + p_i) ordered low-to-high degree, so that the
// companion matrix F - G*k has eigenvalues at -p_i. Poles must be positive.
GainRow place_poles(const std::array<double, 4>& poles);

}  // namespace sbc
