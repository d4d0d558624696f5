#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Core>

#include "sbc/pipeline.hpp"

namespace sbc {

// Deterministic seed scrambler; every randomized harness derives its
// per-trial engines through this, so reports are byte-stable for a seed.
std::uint64_t splitmix64(std::uint64_t x);
std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream);

// Reference QP solution by enumerating candidate active subsets and
// keeping the feasible candidate of least objective. Exponential in the
// row count; oracle use only. Returns nullopt on an empty feasible set.
std::optional<Eigen::VectorXd> brute_force_qp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                              const Eigen::VectorXd& nominal);

struct FuzzReport {
    std::string suite;
    int trials = 0;
    int passed = 0;
    int rejected = 0;  // precondition rejections, not failures
    int failed = 0;
    std::string first_failure;  // serialized instance for replay

    bool pass() const { return failed == 0 && trials > 0; }
};

// Non-empty certificate sets on random aggregate states (m = 2..6).
FuzzReport feasibility_fuzz(std::uint64_t seed, int trials);
// Active-set solver vs brute force on random small QPs.
FuzzReport qp_oracle_fuzz(std::uint64_t seed, int trials);
// Analytic certificate algebra vs finite-differenced barrier derivative.
FuzzReport lie_derivative_fuzz(std::uint64_t seed, int trials);
// Endogenous transform consistency along random polynomial trajectories.
FuzzReport flatness_fuzz(std::uint64_t seed, int trials);
// Closed-loop eigenvalues of the pole-placed integrator chain.
FuzzReport pole_placement_fuzz(std::uint64_t seed, int trials);

// Random multi-vehicle scenario that passes the initial-condition checks.
ScenarioConfig random_scenario(std::uint64_t seed);

}  // namespace sbc
