#include "sbc/qp_rectifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "sbc/errors.hpp"

namespace sbc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kProbeMargin = 1e-3;  // slack per unit row norm

struct ActiveSetSolution {
    Eigen::VectorXd v;
    std::vector<int> working;      // insertion order
    std::vector<double> lambda_half;  // multipliers of 1/2|v-nominal|^2 form
};

Eigen::MatrixXd working_columns(const Eigen::MatrixXd& a, const std::vector<int>& working) {
    Eigen::MatrixXd n(a.cols(), working.size());
    for (std::size_t w = 0; w < working.size(); ++w) n.col(static_cast<int>(w)) = a.row(working[w]).transpose();
    return n;
}

// Dual active-set iteration for min 1/2 |v - nominal|^2 s.t. a v <= b.
// Starts from the unconstrained optimum (or a warm equality-constrained
// solve), adds the most violated row per outer pass, and retreats along
// blocking multipliers. Returns nullopt when the dual is unbounded, i.e.
// the constraint polyhedron is empty.
std::optional<ActiveSetSolution> run_active_set(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                                const Eigen::VectorXd& nominal,
                                                const std::vector<int>& warm, double feas_tol) {
    const int rows = static_cast<int>(a.rows());

    Eigen::VectorXd v = nominal;
    std::vector<int> working;
    std::vector<double> mult;

    // Warm phase: re-solve the previous step's equality system and shed
    // rows whose multiplier sign no longer supports them.
    for (int idx : warm) {
        if (idx >= 0 && idx < rows && std::find(working.begin(), working.end(), idx) == working.end())
            working.push_back(idx);
    }
    while (!working.empty()) {
        Eigen::MatrixXd n = working_columns(a, working);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(n);
        const int width = static_cast<int>(working.size());
        if (qr.rank() < width) {
            working.clear();
            break;
        }
        Eigen::VectorXd b_w(working.size());
        for (std::size_t w = 0; w < working.size(); ++w) b_w(static_cast<int>(w)) = b(working[w]);
        Eigen::VectorXd u = (n.transpose() * n).ldlt().solve(n.transpose() * nominal - b_w);
        if (!u.allFinite()) {
            working.clear();
            break;
        }
        int worst = -1;
        for (int w = 0; w < u.size(); ++w) {
            if (u(w) < 0.0 && (worst < 0 || u(w) < u(worst) ||
                               (u(w) == u(worst) && working[w] < working[worst])))
                worst = w;
        }
        if (worst >= 0) {
            working.erase(working.begin() + worst);
            continue;
        }
        v = nominal - n * u;
        mult.assign(u.data(), u.data() + u.size());
        break;
    }
    if (working.empty()) {
        v = nominal;
        mult.clear();
    }

    const int step_cap = 200 + 20 * rows;
    for (int step = 0; step < step_cap; ++step) {
        // Most violated resting row; ties resolve to the lowest index.
        int entering = -1;
        double worst_violation = feas_tol;
        for (int k = 0; k < rows; ++k) {
            if (std::find(working.begin(), working.end(), k) != working.end()) continue;
            const double s = a.row(k).dot(v) - b(k);
            if (s > worst_violation) {
                worst_violation = s;
                entering = k;
            }
        }
        if (entering < 0) {
            if (!v.allFinite())
                throw std::logic_error("qp_rectifier: active-set solve lost finiteness");
            return ActiveSetSolution{v, working, mult};
        }

        const Eigen::VectorXd a_p = a.row(entering).transpose();
        double s_p = worst_violation;
        double u_p = 0.0;
        for (int inner = 0; inner < step_cap; ++inner) {
            Eigen::VectorXd r;
            Eigen::VectorXd z = a_p;
            Eigen::MatrixXd n;
            if (!working.empty()) {
                n = working_columns(a, working);
                // Rank-revealing least-squares keeps r bounded when the
                // working set drifts toward linear dependence; the residual
                // z is the true orthogonal complement either way.
                r = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(n).solve(a_p);
                z -= n * r;
            }

            // Longest retreat the current multipliers admit.
            double t1 = kInf;
            int blocking = -1;
            for (int w = 0; w < static_cast<int>(working.size()); ++w) {
                if (r(w) <= 1e-12) continue;
                const double cand = mult[static_cast<std::size_t>(w)] / r(w);
                if (cand < t1 || (cand == t1 && working[w] < working[blocking])) {
                    t1 = cand;
                    blocking = w;
                }
            }

            if (z.norm() > 1e-10 * std::max(1.0, a_p.norm())) {
                const double t2 = s_p / z.squaredNorm();
                if (t2 <= t1) {
                    v -= t2 * z;
                    for (int w = 0; w < static_cast<int>(working.size()); ++w)
                        mult[static_cast<std::size_t>(w)] -= t2 * r(w);
                    working.push_back(entering);
                    mult.push_back(u_p + t2);
                    break;
                }
                v -= t1 * z;
                for (int w = 0; w < static_cast<int>(working.size()); ++w)
                    mult[static_cast<std::size_t>(w)] -= t1 * r(w);
                u_p += t1;
                s_p = a_p.dot(v) - b(entering);
            } else {
                if (blocking < 0) return std::nullopt;
                for (int w = 0; w < static_cast<int>(working.size()); ++w)
                    mult[static_cast<std::size_t>(w)] -= t1 * r(w);
                u_p += t1;
            }
            mult.erase(mult.begin() + blocking);
            working.erase(working.begin() + blocking);
        }
    }
    throw std::logic_error("qp_rectifier: active-set iteration cap exceeded");
}

void append_box_rows(Eigen::MatrixXd& a, Eigen::VectorXd& b, int barrier_rows,
                     const std::vector<double>& alpha) {
    const int dim = static_cast<int>(a.cols());
    const int vehicles = dim / 3;
    a.conservativeResize(barrier_rows + 6 * vehicles, dim);
    b.conservativeResize(barrier_rows + 6 * vehicles);
    a.bottomRows(6 * vehicles).setZero();
    for (int i = 0; i < vehicles; ++i) {
        for (int axis = 0; axis < 3; ++axis) {
            const int row = barrier_rows + 6 * i + 2 * axis;
            a(row, 3 * i + axis) = 1.0;
            b(row) = alpha[static_cast<std::size_t>(i)];
            a(row + 1, 3 * i + axis) = -1.0;
            b(row + 1) = alpha[static_cast<std::size_t>(i)];
        }
    }
}

double max_violation(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& v) {
    double worst = 0.0;
    for (int k = 0; k < a.rows(); ++k) worst = std::max(worst, a.row(k).dot(v) - b(k));
    return worst;
}

// Residual of the stationarity/complementarity system in the 2(v - nominal)
// gradient convention used by the recorded multipliers.
double kkt_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& nominal,
                    const ActiveSetSolution& sol) {
    Eigen::VectorXd grad = 2.0 * (sol.v - nominal);
    double comp = 0.0;
    for (std::size_t w = 0; w < sol.working.size(); ++w) {
        const int k = sol.working[w];
        const double lambda = 2.0 * sol.lambda_half[w];
        grad += lambda * a.row(k).transpose();
        comp = std::max(comp, std::abs(lambda * (a.row(k).dot(sol.v) - b(k))));
    }
    const double stat = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
    return std::max({stat, comp, max_violation(a, b, sol.v)});
}

}  // namespace

void RectificationProblem::validate() const {
    if (nominal.size() == 0 || nominal.size() % 3 != 0)
        throw ValidationError("rectification nominal must stack 3 snap entries per vehicle");
    if (!nominal.allFinite()) throw ValidationError("rectification nominal is not finite");
    for (const BarrierConstraint& c : constraints) {
        if (c.row.size() != nominal.size())
            throw ValidationError("certificate row width does not match vehicle count");
        if (!c.row.allFinite() || !std::isfinite(c.bound))
            throw ValidationError("certificate row is not finite");
    }
    if (snap_bounds) {
        if (static_cast<int>(snap_bounds->size()) != vehicle_count())
            throw ValidationError("snap_bounds must list one bound per vehicle");
        for (double alpha : *snap_bounds) {
            if (!(alpha > 0.0) || !std::isfinite(alpha))
                throw ValidationError("snap bound must be positive and finite");
        }
    }
}

RectifiedControl QpRectifier::solve(const RectificationProblem& problem) {
    problem.validate();
    const int dim = static_cast<int>(problem.nominal.size());
    const int barrier_rows = static_cast<int>(problem.constraints.size());

    Eigen::MatrixXd a(barrier_rows, dim);
    Eigen::VectorXd b(barrier_rows);
    for (int k = 0; k < barrier_rows; ++k) {
        a.row(k) = problem.constraints[static_cast<std::size_t>(k)].row.transpose();
        b(k) = problem.constraints[static_cast<std::size_t>(k)].bound;
    }
    if (problem.snap_bounds) append_box_rows(a, b, barrier_rows, *problem.snap_bounds);

    RectifiedControl out;
    const double nominal_violation = max_violation(a, b, problem.nominal);
    if (nominal_violation <= kFeasTol) {
        out.v = problem.nominal;
        out.kkt_residual = std::max(nominal_violation, 0.0);
        return out;
    }

    auto sol = run_active_set(a, b, problem.nominal, warm_active_, kFeasTol);
    if (!sol && problem.snap_bounds) {
        // Bounds conflict with the certificates; safety outranks the
        // actuator envelope, so re-solve without the box and report how
        // far the result overruns it.
        std::vector<int> warm_barrier;
        for (int idx : warm_active_)
            if (idx < barrier_rows) warm_barrier.push_back(idx);
        a.conservativeResize(barrier_rows, dim);
        b.conservativeResize(barrier_rows);
        sol = run_active_set(a, b, problem.nominal, warm_barrier, kFeasTol);
        if (sol) {
            out.relaxed_bounds = true;
            for (int i = 0; i < dim / 3; ++i) {
                const double over = sol->v.segment(3 * i, 3).cwiseAbs().maxCoeff() -
                                    (*problem.snap_bounds)[static_cast<std::size_t>(i)];
                out.worst_bound_violation = std::max(out.worst_bound_violation, over);
            }
            out.worst_bound_violation = std::max(out.worst_bound_violation, 0.0);
        }
    }
    if (!sol) throw InfeasibleError("certificate constraints admit no snap input");

    for (double& m : sol->lambda_half) m = std::max(m, 0.0);
    out.v = sol->v;
    out.active = sol->working;
    std::sort(out.active.begin(), out.active.end());
    out.kkt_residual = kkt_residual(a, b, problem.nominal, *sol);
    warm_active_ = out.active;
    return out;
}

RectifiedControl solve(const RectificationProblem& problem) {
    QpRectifier rectifier;
    return rectifier.solve(problem);
}

Eigen::VectorXd feasibility_probe(const std::vector<IntegratorState>& states,
                                  const SafetyGeometry& geom, const GainRow& gains) {
    const int vehicles = static_cast<int>(states.size());
    if (vehicles < 2) return Eigen::VectorXd::Zero(3 * std::max(vehicles, 1));

    // Non-emptiness is only guaranteed inside the safe set; a colliding
    // input is a precondition violation, not probe infeasibility.
    for (int i = 0; i < vehicles; ++i) {
        for (int j = i + 1; j < vehicles; ++j) {
            if (barrier_value(states[static_cast<std::size_t>(i)],
                              states[static_cast<std::size_t>(j)], geom) <= 0.0)
                throw ValidationError("feasibility_probe: vehicles " + std::to_string(i) +
                                      " and " + std::to_string(j) + " start in collision");
        }
    }

    std::vector<BarrierConstraint> rows = assemble_certificates(states, geom, gains);
    RectificationProblem probe;
    probe.nominal = Eigen::VectorXd::Zero(3 * vehicles);
    probe.constraints.reserve(rows.size());
    for (const BarrierConstraint& c : rows) {
        // Unit-normal copy with a uniform strict margin, so the witness
        // clears every original halfspace by margin * |row|.
        BarrierConstraint scaled = c;
        const double nrm = c.row.norm();
        scaled.row = c.row / nrm;
        scaled.bound = c.bound / nrm - kProbeMargin;
        probe.constraints.push_back(std::move(scaled));
    }

    QpRectifier rectifier;
    const Eigen::VectorXd witness = rectifier.solve(probe).v;
    for (const BarrierConstraint& c : rows) {
        if (!(c.row.dot(witness) < c.bound))
            throw std::logic_error("feasibility_probe: witness fails strict satisfaction");
    }
    return witness;
}

}  // namespace sbc
