#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sbc/barrier.hpp"

namespace sbc {

// Per-step rectification instance: minimize sum_i |v_i - nominal_i|^2
// subject to every certificate row and, when given, |v_i|_inf <= alpha_i.
struct RectificationProblem {
    Eigen::VectorXd nominal;
    std::vector<BarrierConstraint> constraints;
    std::optional<std::vector<double>> snap_bounds;  // per-vehicle alpha

    int vehicle_count() const { return static_cast<int>(nominal.size()) / 3; }
    void validate() const;
};

struct RectifiedControl {
    Eigen::VectorXd v;
    std::vector<int> active;  // constraint indices held at equality
    double kkt_residual = 0.0;
    bool relaxed_bounds = false;
    double worst_bound_violation = 0.0;
};

// Dense active-set solver for the strictly convex snap-rectification QP.
// Stateful only in its warm-start cache; one instance per simulation run.
class QpRectifier {
public:
    // Feasibility and stationarity tolerances, fixed against the
    // double-precision conditioning of quartic-scale coefficients.
    static constexpr double kFeasTol = 1e-8;
    static constexpr double kKktTol = 1e-6;

    RectifiedControl solve(const RectificationProblem& problem);
    void reset() { warm_active_.clear(); }

private:
    std::vector<int> warm_active_;
};

// Stateless convenience wrapper.
RectifiedControl solve(const RectificationProblem& problem);

// Witness that the assembled certificate set is non-empty: a snap vector
// satisfying every barrier constraint with strictly positive slack.
// Throws InfeasibleError if the constraint LP were infeasible, which a
// non-colliding team can never produce.
Eigen::VectorXd feasibility_probe(const std::vector<IntegratorState>& states,
                                  const SafetyGeometry& geom, const GainRow& gains);

}  // namespace sbc
