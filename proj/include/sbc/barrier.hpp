#pragma once

#include <vector>

#include <Eigen/Core>

#include "sbc/lindyn.hpp"

namespace sbc {

enum class SafetyShape { kRectangle, kCylinder };

// Super-ellipsoid safety envelope shared by all pairs. The rectangle shape
// is the quartic |dx|^4 + |dy|^4 + |dz/c|^4; the cylinder variant replaces
// the horizontal term with (dx^2 + dy^2)^(n/2).
struct SafetyGeometry {
    double ds = 0.25;  // safety distance, m
    double c = 2.0;    // vertical scaling against downwash, >= 1
    SafetyShape shape = SafetyShape::kRectangle;
    double exponent = 4.0;  // cylinder exponent n; rectangle is always 4

    void validate() const;
};

// Barrier value and its first three time derivatives along the drift.
struct EtaVector {
    double h = 0.0;
    double dh = 0.0;
    double ddh = 0.0;
    double dddh = 0.0;

    Eigen::Vector4d stacked() const { return {h, dh, ddh, dddh}; }
};

// One pairwise certificate row A.v <= b over the aggregate snap command.
struct BarrierConstraint {
    int i = 0;
    int j = 0;
    Eigen::VectorXd row;  // 3m coefficients, zero outside blocks i and j
    double bound = 0.0;
};

// Per-pair initial-condition outputs y_0..y_3; the certificate guarantees
// forward invariance only when all are non-negative at t = 0.
struct PairInitialCondition {
    int i = 0;
    int j = 0;
    Eigen::Vector4d y = Eigen::Vector4d::Zero();
    bool pass = false;
};

struct InitialConditionReport {
    std::vector<PairInitialCondition> pairs;
    bool pass = true;
};

double barrier_value(const IntegratorState& qi, const IntegratorState& qj,
                     const SafetyGeometry& geom);

// Closed-form polynomial derivatives of the rectangle barrier; no numerical
// differentiation. Cylinder geometries are supported at exponent 4 only.
EtaVector eta(const IntegratorState& qi, const IntegratorState& qj,
              const SafetyGeometry& geom);

// Affine decomposition of the degree-4 certificate inequality: for every
// aggregate snap v, the closed-form 4th derivative of h equals
// -row.v + bound - k.eta.
BarrierConstraint constraint_row(const IntegratorState& qi, const IntegratorState& qj,
                                 const SafetyGeometry& geom, const GainRow& gains,
                                 int i, int j, int vehicle_count);

// All m(m-1)/2 rows in lexicographic (i, j) order.
std::vector<BarrierConstraint> assemble_certificates(const std::vector<IntegratorState>& states,
                                                     const SafetyGeometry& geom,
                                                     const GainRow& gains);

InitialConditionReport check_initial_conditions(const std::vector<IntegratorState>& states,
                                                const SafetyGeometry& geom,
                                                const GainRow& gains);

}  // namespace sbc
