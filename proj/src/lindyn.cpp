#include "sbc/lindyn.hpp"

#include <cmath>
#include <string>

#include "sbc/errors.hpp"

namespace sbc {

namespace {

void require_finite(const Eigen::Vector3d& v, const char* field) {
    if (!v.allFinite()) {
        throw ValidationError(std::string("non-finite value in field '") + field + "'");
    }
}

}  // namespace

bool IntegratorState::all_finite() const {
    return r.allFinite() && dr.allFinite() && ddr.allFinite() && dddr.allFinite();
}

IntegratorState operator+(const IntegratorState& a, const IntegratorState& b) {
    return {a.r + b.r, a.dr + b.dr, a.ddr + b.ddr, a.dddr + b.dddr};
}

IntegratorState operator*(double s, const IntegratorState& q) {
    return {s * q.r, s * q.dr, s * q.ddr, s * q.dddr};
}

ChainMatrices chain_matrices() {
    ChainMatrices cm;
    cm.f.setZero();
    cm.f(0, 1) = cm.f(1, 2) = cm.f(2, 3) = 1.0;
    cm.g << 0.0, 0.0, 0.0, 1.0;
    return cm;
}

IntegratorState euler_step(const IntegratorState& q, const Eigen::Vector3d& v, double dt) {
    require_finite(q.r, "r");
    require_finite(q.dr, "dr");
    require_finite(q.ddr, "ddr");
    require_finite(q.dddr, "dddr");
    require_finite(v, "v");
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ValidationError("euler_step: dt must be positive and finite");
    }
    IntegratorState out;
    out.r = q.r + dt * q.dr;
    out.dr = q.dr + dt * q.ddr;
    out.ddr = q.ddr + dt * q.dddr;
    out.dddr = q.dddr + dt * v;
    return out;
}

GainRow place_poles(const std::array<double, 4>& poles) {
    for (double p : poles) {
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw ValidationError("place_poles: poles must be strictly positive and finite");
        }
    }

    // Expand prod(s + p_i) incrementally; c[j] is the degree-j coefficient.
    std::array<double, 5> c{1.0, 0.0, 0.0, 0.0, 0.0};
    int degree = 0;
    for (double p : poles) {
        for (int j = degree + 1; j > 0; --j) {
            c[j] = c[j - 1] + p * c[j];
        }
        c[0] *= p;
        ++degree;
    }

    GainRow row;
    row.k << c[0], c[1], c[2], c[3];
    row.poles = poles;
    return row;
}

}  // namespace sbc
