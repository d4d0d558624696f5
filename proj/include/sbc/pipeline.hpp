#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sbc/barrier.hpp"
#include "sbc/flatness.hpp"
#include "sbc/lindyn.hpp"
#include "sbc/qp_rectifier.hpp"
#include "sbc/reference.hpp"

namespace sbc {

struct ReferenceSpec {
    enum class Kind { kHover, kCircle, kBezier };
    Kind kind = Kind::kHover;
    // hover
    Eigen::Vector3d hover = Eigen::Vector3d::Zero();
    // circle
    double radius = 0.0;
    double rate = 0.0;
    double phase = 0.0;
    double z = 0.0;
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    // bezier
    Eigen::Vector3d p0 = Eigen::Vector3d::Zero();
    Eigen::Vector3d p1 = Eigen::Vector3d::Zero();
    double T = 1.0;

    std::unique_ptr<ReferenceTrajectory> build() const;
    // Flat sample the vehicle should start from (reference at parameter 0).
    IntegratorState start_state() const;
};

struct RetunePolicy {
    bool enabled = false;
    double factor = 10.0;
    int cap = 3;  // re-runs after the first attempt

    void validate() const;
};

struct ScenarioConfig {
    std::string name = "scenario";
    double dt = 0.02;
    double duration = 10.0;
    double k_s = 100.0;
    std::optional<double> snap_bound;  // per-axis |v| cap, same for every vehicle
    std::array<double, 4> poles = {6.0, 6.6, 7.2, 7.8};
    SafetyGeometry geometry;
    VehicleParams vehicle;
    ActuatorLimits limits;
    RetunePolicy retune;
    std::vector<ReferenceSpec> references;  // one per vehicle
    std::vector<IntegratorState> initial;   // one per vehicle

    int vehicle_count() const { return static_cast<int>(references.size()); }
    int step_count() const;
    void validate() const;
};

struct PairSample {
    int i = 0;
    int j = 0;
    double h = 0.0;      // barrier value at the step's start state
    double slack = 0.0;  // certificate slack at the nominal snap
};

// Everything the controller saw and decided at one control instant.
struct StepRecord {
    double t = 0.0;
    std::vector<IntegratorState> states;  // at t, before integrating
    std::vector<FlatSample> references;   // parameterized reference per vehicle
    Eigen::VectorXd nominal;
    Eigen::VectorXd rectified;
    std::vector<double> clock_s;
    std::vector<double> clock_ds;
    std::vector<PairSample> pairs;
    std::vector<int> active;
    std::vector<std::optional<FullState>> full_states;  // nullopt on singular sample
    std::vector<std::optional<ControlInput>> inputs;
    bool relaxed_bounds = false;
    double kkt_residual = 0.0;
    bool nominal_returned = false;  // rectified equals nominal bitwise
};

struct SafetySummary {
    bool pass = true;
    double min_h = std::numeric_limits<double>::infinity();
    double min_h_time = 0.0;
    int min_h_i = -1;
    int min_h_j = -1;
    int first_violation_step = -1;
};

struct SimulationTrace {
    std::vector<StepRecord> steps;
    std::vector<IntegratorState> final_states;
    std::vector<VirtualClock> final_clocks;
    SafetySummary safety;
};

// Per-scenario audit rollup across vehicles.
struct AuditSummary {
    bool pass = false;
    double max_tilt = 0.0;
    int max_tilt_vehicle = -1;
    double max_tilt_time = 0.0;
    double max_thrust_ratio = 0.0;
    int max_thrust_ratio_vehicle = -1;
    double max_thrust_ratio_time = 0.0;
    double max_torque = 0.0;
    int singular_vehicle = -1;
    int singular_index = -1;
};

struct AttemptReport {
    double k_s = 0.0;
    bool audit_pass = false;
    bool safety_pass = false;
    double max_tilt = 0.0;
    double max_thrust_ratio = 0.0;
    double min_h = 0.0;
};

struct ScenarioResult {
    ScenarioConfig config;   // as requested (echoing this reproduces the run)
    double k_s_final = 0.0;  // gain of the reported attempt
    SimulationTrace trace;
    std::vector<AuditReport> vehicle_audits;
    AuditSummary audit;
    std::vector<double> goal_errors;  // final distance to each reference goal
    std::vector<AttemptReport> attempts;
};

struct WorldState {
    double t = 0.0;
    std::vector<IntegratorState> states;
    std::vector<VirtualClock> clocks;
};

// Pole-placed snap command tracking the reference sample, applied per axis.
Eigen::Vector3d nominal_control(const IntegratorState& q, const FlatSample& ref,
                                const GainRow& gains);

// One 20 ms control step: clocks, references, nominal control, certificate
// assembly, rectification, integration. Mutates the world and returns the
// record of what happened.
StepRecord run_step(WorldState& world, const std::vector<std::unique_ptr<ReferenceTrajectory>>& refs,
                    const ScenarioConfig& config, const GainRow& gains, QpRectifier& rectifier);

// Full run at the config's own k_s; no retuning.
SimulationTrace run_trace(const ScenarioConfig& config);

// Full run plus actuator audit; when the retune policy is enabled and the
// audit fails, retries with a stiffer parameterization gain and reports
// every attempt. The returned trace belongs to the first passing attempt,
// or to the best-scoring one if none passes.
ScenarioResult run_scenario(const ScenarioConfig& config);

}  // namespace sbc
