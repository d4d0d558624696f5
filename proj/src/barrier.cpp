#include "sbc/barrier.hpp"

#include <cmath>
#include <string>

#include "sbc/errors.hpp"

namespace sbc {

namespace {

double sq(double x) { return x * x; }
double cube(double x) { return x * x * x; }

// Relative coordinates with the vertical axis pre-scaled by 1/c, so the
// rectangle barrier is sum(delta_k^4) - ds^4 in these coordinates.
struct RelativeJet {
    Eigen::Vector3d d;    // (dx, dy, dz/c)
    Eigen::Vector3d d1;   // first time derivative
    Eigen::Vector3d d2;
    Eigen::Vector3d d3;
};

RelativeJet relative_jet(const IntegratorState& qi, const IntegratorState& qj, double c) {
    const Eigen::Vector3d scale(1.0, 1.0, 1.0 / c);
    RelativeJet jet;
    jet.d = (qi.r - qj.r).cwiseProduct(scale);
    jet.d1 = (qi.dr - qj.dr).cwiseProduct(scale);
    jet.d2 = (qi.ddr - qj.ddr).cwiseProduct(scale);
    jet.d3 = (qi.dddr - qj.dddr).cwiseProduct(scale);
    return jet;
}

}  // namespace

void SafetyGeometry::validate() const {
    if (!(ds > 0.0) || !std::isfinite(ds)) {
        throw ValidationError("geometry.D_s must be positive");
    }
    if (!(c >= 1.0) || !std::isfinite(c)) {
        throw ValidationError("geometry.c must be >= 1");
    }
    if (shape == SafetyShape::kRectangle && exponent != 4.0) {
        throw ValidationError("geometry.n: rectangle shape uses exponent 4 exactly");
    }
    if (shape == SafetyShape::kCylinder && (!(exponent >= 2.0) || !std::isfinite(exponent))) {
        throw ValidationError("geometry.n must be >= 2 for the cylinder shape");
    }
}

double barrier_value(const IntegratorState& qi, const IntegratorState& qj,
                     const SafetyGeometry& geom) {
    const Eigen::Vector3d d = qi.r - qj.r;
    if (geom.shape == SafetyShape::kRectangle) {
        return sq(sq(d.x())) + sq(sq(d.y())) + sq(sq(d.z() / geom.c)) -
               sq(sq(geom.ds));
    }
    const double n = geom.exponent;
    return std::pow(d.head<2>().squaredNorm(), n / 2.0) +
           std::pow(std::abs(d.z() / geom.c), n) - std::pow(geom.ds, n);
}

EtaVector eta(const IntegratorState& qi, const IntegratorState& qj,
              const SafetyGeometry& geom) {
    const RelativeJet jet = relative_jet(qi, qj, geom.c);
    EtaVector out;

    if (geom.shape == SafetyShape::kCylinder) {
        if (geom.exponent != 4.0) {
            throw ValidationError("eta: cylinder derivatives implemented for exponent 4 only");
        }
        // h = rho^2 + w^4 - ds^4 with rho = dx^2 + dy^2, w = dz/c.
        const Eigen::Vector2d u = jet.d.head<2>(), u1 = jet.d1.head<2>(),
                              u2 = jet.d2.head<2>(), u3 = jet.d3.head<2>();
        const double rho = u.squaredNorm();
        const double rho1 = 2.0 * u.dot(u1);
        const double rho2 = 2.0 * (u1.squaredNorm() + u.dot(u2));
        const double rho3 = 2.0 * (3.0 * u1.dot(u2) + u.dot(u3));
        const double w = jet.d.z(), w1 = jet.d1.z(), w2 = jet.d2.z(), w3 = jet.d3.z();
        out.h = sq(rho) + sq(sq(w)) - sq(sq(geom.ds));
        out.dh = 2.0 * rho * rho1 + 4.0 * cube(w) * w1;
        out.ddh = 2.0 * (sq(rho1) + rho * rho2) + 12.0 * sq(w) * sq(w1) + 4.0 * cube(w) * w2;
        out.dddh = 2.0 * (3.0 * rho1 * rho2 + rho * rho3) + 24.0 * w * cube(w1) +
                   36.0 * sq(w) * w1 * w2 + 4.0 * cube(w) * w3;
        return out;
    }

    out.h = -sq(sq(geom.ds));
    for (int k = 0; k < 3; ++k) {
        const double d = jet.d(k), d1 = jet.d1(k), d2 = jet.d2(k), d3 = jet.d3(k);
        out.h += sq(sq(d));
        out.dh += 4.0 * cube(d) * d1;
        out.ddh += 12.0 * sq(d) * sq(d1) + 4.0 * cube(d) * d2;
        out.dddh += 24.0 * d * cube(d1) + 36.0 * sq(d) * d1 * d2 + 4.0 * cube(d) * d3;
    }
    return out;
}

BarrierConstraint constraint_row(const IntegratorState& qi, const IntegratorState& qj,
                                 const SafetyGeometry& geom, const GainRow& gains,
                                 int i, int j, int vehicle_count) {
    if (i == j) {
        throw ValidationError("constraint_row: i and j must differ");
    }
    if ((qi.r - qj.r).isZero(0.0)) {
        throw DegenerateGeometryError("coincident positions for pair (" + std::to_string(i) +
                                      ", " + std::to_string(j) + "): no valid certificate row");
    }

    const RelativeJet jet = relative_jet(qi, qj, geom.c);
    // Gradient of h in the scaled coordinates; the vehicle-block entries pick
    // up one more 1/c on the vertical axis because delta_z'''' = dv_z / c.
    Eigen::Vector3d grad;
    double drift = 0.0;  // snap-free part of the 4th derivative
    if (geom.shape == SafetyShape::kCylinder) {
        if (geom.exponent != 4.0) {
            throw ValidationError("constraint_row: cylinder rows implemented for exponent 4 only");
        }
        const Eigen::Vector2d u = jet.d.head<2>(), u1 = jet.d1.head<2>(),
                              u2 = jet.d2.head<2>(), u3 = jet.d3.head<2>();
        const double rho = u.squaredNorm();
        const double rho1 = 2.0 * u.dot(u1);
        const double rho2 = 2.0 * (u1.squaredNorm() + u.dot(u2));
        const double rho3 = 2.0 * (3.0 * u1.dot(u2) + u.dot(u3));
        // d4/dt4 rho^2 = 2(3 rho2^2 + 4 rho1 rho3 + rho rho4); rho4 carries
        // the input through 2 u.u4.
        drift = 2.0 * (3.0 * sq(rho2) + 4.0 * rho1 * rho3) +
                2.0 * rho * 2.0 * (3.0 * u2.squaredNorm() + 4.0 * u1.dot(u3));
        const double w = jet.d.z(), w1 = jet.d1.z(), w2 = jet.d2.z(), w3 = jet.d3.z();
        drift += 24.0 * sq(sq(w1)) + 144.0 * w * sq(w1) * w2 + 36.0 * sq(w) * sq(w2) +
                 48.0 * sq(w) * w1 * w3;
        grad << 4.0 * rho * u.x(), 4.0 * rho * u.y(), 4.0 * cube(w);
    } else {
        for (int k = 0; k < 3; ++k) {
            const double d = jet.d(k), d1 = jet.d1(k), d2 = jet.d2(k), d3 = jet.d3(k);
            drift += 24.0 * sq(sq(d1)) + 144.0 * d * sq(d1) * d2 + 36.0 * sq(d) * sq(d2) +
                     48.0 * sq(d) * d1 * d3;
            grad(k) = 4.0 * cube(d);
        }
    }
    grad(2) /= geom.c;

    BarrierConstraint out;
    out.i = i;
    out.j = j;
    out.row = Eigen::VectorXd::Zero(3 * vehicle_count);
    out.row.segment<3>(3 * i) = -grad;
    out.row.segment<3>(3 * j) = grad;
    out.bound = gains.k.dot(eta(qi, qj, geom).stacked()) + drift;
    return out;
}

std::vector<BarrierConstraint> assemble_certificates(const std::vector<IntegratorState>& states,
                                                     const SafetyGeometry& geom,
                                                     const GainRow& gains) {
    const int m = static_cast<int>(states.size());
    std::vector<BarrierConstraint> rows;
    rows.reserve(static_cast<size_t>(m) * static_cast<size_t>(m - 1) / 2);
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            rows.push_back(constraint_row(states[static_cast<size_t>(i)],
                                          states[static_cast<size_t>(j)], geom, gains, i, j, m));
        }
    }
    return rows;
}

InitialConditionReport check_initial_conditions(const std::vector<IntegratorState>& states,
                                                const SafetyGeometry& geom,
                                                const GainRow& gains) {
    const int m = static_cast<int>(states.size());
    InitialConditionReport report;
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const EtaVector e =
                eta(states[static_cast<size_t>(i)], states[static_cast<size_t>(j)], geom);
            const Eigen::Vector4d stack = e.stacked();

            // y_i = (d/dt + p_i) o ... o (d/dt + p_1) h, expanded as weights
            // over the Lie-derivative stack; d/dt shifts weight one slot up.
            Eigen::Vector4d w = Eigen::Vector4d::Zero();
            w(0) = 1.0;
            PairInitialCondition pic;
            pic.i = i;
            pic.j = j;
            pic.y(0) = stack(0);
            for (int level = 0; level < 3; ++level) {
                Eigen::Vector4d shifted = Eigen::Vector4d::Zero();
                shifted.tail(3) = w.head(3);
                w = shifted + gains.poles[static_cast<size_t>(level)] * w;
                pic.y(level + 1) = w.dot(stack);
            }
            pic.pass = (pic.y.array() >= 0.0).all();
            report.pass = report.pass && pic.pass;
            report.pairs.push_back(pic);
        }
    }
    return report;
}

}  // namespace sbc
