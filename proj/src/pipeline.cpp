#include "sbc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "sbc/errors.hpp"

namespace sbc {
namespace {

constexpr double kSafetyFloor = -1e-9;  // numerical zero for min-h monitoring
constexpr double kRetuneSeed = 10.0;    // k_s to retry with when starting from 0

FlatSample executed_sample(const IntegratorState& q, const Eigen::Vector3d& snap) {
    FlatSample s;
    s.r = q.r;
    s.dr = q.dr;
    s.ddr = q.ddr;
    s.dddr = q.dddr;
    s.ddddr = snap;
    return s;
}

void scan_pair_safety(const std::vector<IntegratorState>& states, const SafetyGeometry& geom,
                      double t, int step, SafetySummary& safety) {
    const int m = static_cast<int>(states.size());
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const double h = barrier_value(states[static_cast<std::size_t>(i)],
                                           states[static_cast<std::size_t>(j)], geom);
            if (h < safety.min_h) {
                safety.min_h = h;
                safety.min_h_time = t;
                safety.min_h_i = i;
                safety.min_h_j = j;
            }
            if (h < kSafetyFloor && safety.first_violation_step < 0) {
                safety.first_violation_step = step;
                safety.pass = false;
            }
        }
    }
}

std::vector<FlatSample> flat_trace(const SimulationTrace& trace, int vehicle) {
    std::vector<FlatSample> samples;
    samples.reserve(trace.steps.size());
    for (const StepRecord& rec : trace.steps)
        samples.push_back(executed_sample(rec.states[static_cast<std::size_t>(vehicle)],
                                          rec.rectified.segment(3 * vehicle, 3)));
    return samples;
}

AuditSummary merge_audits(const std::vector<AuditReport>& audits) {
    AuditSummary summary;
    summary.pass = true;
    for (int i = 0; i < static_cast<int>(audits.size()); ++i) {
        const AuditReport& a = audits[static_cast<std::size_t>(i)];
        summary.pass = summary.pass && a.pass;
        if (a.max_tilt_index >= 0 && a.max_tilt > summary.max_tilt) {
            summary.max_tilt = a.max_tilt;
            summary.max_tilt_vehicle = i;
            summary.max_tilt_time = a.max_tilt_time;
        }
        if (a.max_thrust_ratio_index >= 0 && a.max_thrust_ratio > summary.max_thrust_ratio) {
            summary.max_thrust_ratio = a.max_thrust_ratio;
            summary.max_thrust_ratio_vehicle = i;
            summary.max_thrust_ratio_time = a.max_thrust_ratio_time;
        }
        summary.max_torque = std::max(summary.max_torque, a.max_torque);
        if (a.singular_index >= 0 && summary.singular_vehicle < 0) {
            summary.singular_vehicle = i;
            summary.singular_index = a.singular_index;
        }
    }
    return summary;
}

// Distance from the final position to where the reference ultimately
// wants the vehicle: the endpoint for finite trajectories, the current
// reference point for unbounded ones.
double goal_error(const IntegratorState& final_state, const ReferenceTrajectory& traj,
                  const VirtualClock& clock) {
    const double target = std::isinf(traj.duration()) ? clock.s : traj.duration();
    return (final_state.r - traj.eval(target).r).norm();
}

}  // namespace

std::unique_ptr<ReferenceTrajectory> ReferenceSpec::build() const {
    switch (kind) {
        case Kind::kHover:
            if (!hover.allFinite()) throw ValidationError("hover point must be finite");
            return hover_ref(hover);
        case Kind::kCircle:
            return circle_ref(radius, rate, phase, z, center);
        case Kind::kBezier:
            return bezier_interp(p0, p1, T);
    }
    throw ValidationError("unknown reference kind");
}

IntegratorState ReferenceSpec::start_state() const {
    const FlatSample s = build()->eval(0.0);
    IntegratorState q;
    q.r = s.r;
    q.dr = s.dr;
    q.ddr = s.ddr;
    q.dddr = s.dddr;
    return q;
}

void RetunePolicy::validate() const {
    if (enabled && !(factor > 1.0))
        throw ValidationError("retune.factor must exceed 1");
    if (cap < 0 || cap > 100) throw ValidationError("retune.cap must lie in [0, 100]");
}

int ScenarioConfig::step_count() const {
    return static_cast<int>(std::llround(duration / dt));
}

void ScenarioConfig::validate() const {
    if (references.empty()) throw ValidationError("scenario needs at least one vehicle");
    if (initial.size() != references.size())
        throw ValidationError("vehicles list initial states and references pairwise");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be positive");
    if (!(duration > 0.0) || !std::isfinite(duration))
        throw ValidationError("duration must be positive");
    if (step_count() < 1) throw ValidationError("duration must cover at least one step");
    if (!(k_s >= 0.0) || !std::isfinite(k_s)) throw ValidationError("k_s must be non-negative");
    if (snap_bound && (!(*snap_bound > 0.0) || !std::isfinite(*snap_bound)))
        throw ValidationError("snap_bound must be positive");
    for (double p : poles)
        if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("poles must be positive");
    geometry.validate();
    vehicle.validate();
    limits.validate();
    retune.validate();
    for (const IntegratorState& q : initial)
        if (!q.all_finite()) throw ValidationError("initial states must be finite");
    for (const ReferenceSpec& spec : references) (void)spec.build();
}

Eigen::Vector3d nominal_control(const IntegratorState& q, const FlatSample& ref,
                                const GainRow& gains) {
    Eigen::Vector3d v;
    for (int axis = 0; axis < 3; ++axis) {
        const Eigen::Vector4d error(q.r(axis) - ref.r(axis), q.dr(axis) - ref.dr(axis),
                                    q.ddr(axis) - ref.ddr(axis), q.dddr(axis) - ref.dddr(axis));
        v(axis) = ref.ddddr(axis) - gains.k.dot(error);
    }
    return v;
}

StepRecord run_step(WorldState& world, const std::vector<std::unique_ptr<ReferenceTrajectory>>& refs,
                    const ScenarioConfig& config, const GainRow& gains, QpRectifier& rectifier) {
    const int m = static_cast<int>(world.states.size());

    StepRecord rec;
    rec.t = world.t;
    rec.states = world.states;
    rec.references.reserve(static_cast<std::size_t>(m));
    rec.clock_s.reserve(static_cast<std::size_t>(m));
    rec.clock_ds.reserve(static_cast<std::size_t>(m));
    rec.nominal.resize(3 * m);

    for (int i = 0; i < m; ++i) {
        const std::size_t iu = static_cast<std::size_t>(i);
        const Eigen::Vector3d e_r = world.states[iu].r - refs[iu]->eval(world.clocks[iu].s).r;
        world.clocks[iu] = clock_step(world.clocks[iu], e_r, config.dt);
        rec.clock_s.push_back(world.clocks[iu].s);
        rec.clock_ds.push_back(world.clocks[iu].ds);
        rec.references.push_back(eval_parameterized(*refs[iu], world.clocks[iu]));
        rec.nominal.segment(3 * i, 3) = nominal_control(world.states[iu], rec.references[iu], gains);
    }

    if (m >= 2) {
        RectificationProblem problem;
        problem.nominal = rec.nominal;
        problem.constraints = assemble_certificates(world.states, config.geometry, gains);
        if (config.snap_bound)
            problem.snap_bounds = std::vector<double>(static_cast<std::size_t>(m), *config.snap_bound);

        rec.pairs.reserve(problem.constraints.size());
        for (const BarrierConstraint& c : problem.constraints) {
            PairSample pair;
            pair.i = c.i;
            pair.j = c.j;
            pair.h = barrier_value(world.states[static_cast<std::size_t>(c.i)],
                                   world.states[static_cast<std::size_t>(c.j)], config.geometry);
            pair.slack = c.bound - c.row.dot(rec.nominal);
            rec.pairs.push_back(pair);
        }

        const RectifiedControl control = rectifier.solve(problem);
        rec.rectified = control.v;
        rec.active = control.active;
        rec.kkt_residual = control.kkt_residual;
        rec.relaxed_bounds = control.relaxed_bounds;
    } else {
        rec.rectified = rec.nominal;
    }
    rec.nominal_returned = rec.rectified == rec.nominal;

    rec.full_states.resize(static_cast<std::size_t>(m));
    rec.inputs.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const std::size_t iu = static_cast<std::size_t>(i);
        const FlatSample sample = executed_sample(world.states[iu], rec.rectified.segment(3 * i, 3));
        try {
            rec.full_states[iu] = flat_to_state(sample, config.vehicle);
            rec.inputs[iu] = flat_to_input(sample, config.vehicle);
        } catch (const SingularityError&) {
            rec.full_states[iu] = std::nullopt;
            rec.inputs[iu] = std::nullopt;
        }
    }

    for (int i = 0; i < m; ++i) {
        const std::size_t iu = static_cast<std::size_t>(i);
        world.states[iu] = euler_step(world.states[iu], rec.rectified.segment(3 * i, 3), config.dt);
    }
    world.t += config.dt;
    return rec;
}

SimulationTrace run_trace(const ScenarioConfig& config) {
    config.validate();
    const GainRow gains = place_poles(config.poles);
    const int m = config.vehicle_count();

    std::vector<std::unique_ptr<ReferenceTrajectory>> refs;
    refs.reserve(static_cast<std::size_t>(m));
    for (const ReferenceSpec& spec : config.references) refs.push_back(spec.build());

    if (m >= 2) {
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) {
                const double h = barrier_value(config.initial[static_cast<std::size_t>(i)],
                                               config.initial[static_cast<std::size_t>(j)],
                                               config.geometry);
                if (!(h > 0.0))
                    throw ValidationError("initial states of vehicles " + std::to_string(i) +
                                          " and " + std::to_string(j) +
                                          " do not clear the safety envelope");
            }
        }
        const InitialConditionReport report =
            check_initial_conditions(config.initial, config.geometry, gains);
        if (!report.pass) {
            for (const PairInitialCondition& pair : report.pairs) {
                if (!pair.pass)
                    throw ValidationError(
                        "initial states of vehicles " + std::to_string(pair.i) + " and " +
                        std::to_string(pair.j) + " violate the certificate level conditions");
            }
        }
    }

    WorldState world;
    world.t = 0.0;
    world.states = config.initial;
    world.clocks.assign(static_cast<std::size_t>(m), VirtualClock{0.0, config.k_s, 1.0});

    SimulationTrace trace;
    trace.safety = SafetySummary{};
    scan_pair_safety(world.states, config.geometry, 0.0, -1, trace.safety);

    QpRectifier rectifier;
    const int steps = config.step_count();
    trace.steps.reserve(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) {
        trace.steps.push_back(run_step(world, refs, config, gains, rectifier));
        scan_pair_safety(world.states, config.geometry, world.t, k, trace.safety);
    }
    trace.final_states = world.states;
    trace.final_clocks = world.clocks;
    return trace;
}

ScenarioResult run_scenario(const ScenarioConfig& config) {
    config.validate();

    struct Attempt {
        double k_s = 0.0;
        SimulationTrace trace;
        std::vector<AuditReport> audits;
        AuditSummary summary;
    };

    ScenarioResult result;
    result.config = config;

    std::vector<Attempt> attempts;
    double k_s = config.k_s;
    const int max_attempts = config.retune.enabled ? 1 + config.retune.cap : 1;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        ScenarioConfig cfg = config;
        cfg.k_s = k_s;

        Attempt a;
        a.k_s = k_s;
        a.trace = run_trace(cfg);
        for (int i = 0; i < cfg.vehicle_count(); ++i)
            a.audits.push_back(
                actuator_audit(flat_trace(a.trace, i), cfg.vehicle, cfg.limits, cfg.dt));
        a.summary = merge_audits(a.audits);

        AttemptReport report;
        report.k_s = k_s;
        report.audit_pass = a.summary.pass;
        report.safety_pass = a.trace.safety.pass;
        report.max_tilt = a.summary.max_tilt;
        report.max_thrust_ratio = a.summary.max_thrust_ratio;
        report.min_h = a.trace.safety.min_h;
        result.attempts.push_back(report);
        attempts.push_back(std::move(a));

        if (attempts.back().summary.pass) break;
        k_s = (k_s == 0.0) ? kRetuneSeed : k_s * config.retune.factor;
    }

    // First passing attempt, otherwise the one closest to the limits.
    int chosen = -1;
    double best_score = std::numeric_limits<double>::infinity();
    for (int idx = 0; idx < static_cast<int>(attempts.size()); ++idx) {
        const Attempt& a = attempts[static_cast<std::size_t>(idx)];
        if (a.summary.pass) {
            chosen = idx;
            break;
        }
        double score = std::max(a.summary.max_tilt / config.limits.max_tilt,
                                a.summary.max_thrust_ratio / config.limits.max_thrust_ratio);
        if (a.summary.singular_vehicle >= 0 || !a.trace.safety.pass) score += 1e6;
        if (score < best_score) {
            best_score = score;
            chosen = idx;
        }
    }

    Attempt& final_attempt = attempts[static_cast<std::size_t>(chosen)];
    result.k_s_final = final_attempt.k_s;
    result.trace = std::move(final_attempt.trace);
    result.vehicle_audits = std::move(final_attempt.audits);
    result.audit = final_attempt.summary;

    ScenarioConfig cfg = config;
    cfg.k_s = result.k_s_final;
    std::vector<std::unique_ptr<ReferenceTrajectory>> refs;
    for (const ReferenceSpec& spec : cfg.references) refs.push_back(spec.build());
    for (int i = 0; i < cfg.vehicle_count(); ++i) {
        const std::size_t iu = static_cast<std::size_t>(i);
        result.goal_errors.push_back(
            goal_error(result.trace.final_states[iu], *refs[iu], result.trace.final_clocks[iu]));
    }
    return result;
}

}  // namespace sbc
