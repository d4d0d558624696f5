#include "sbc/verify.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <json.hpp>

#include "sbc/errors.hpp"

namespace sbc {
namespace {

using nlohmann::json;

json vec_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

json state_json(const IntegratorState& q) {
    json j;
    j["r"] = vec_json(q.r);
    j["dr"] = vec_json(q.dr);
    j["ddr"] = vec_json(q.ddr);
    j["dddr"] = vec_json(q.dddr);
    return j;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gaussian(std::mt19937_64& rng, double sigma) {
    return std::normal_distribution<double>(0.0, sigma)(rng);
}

Eigen::Vector3d uniform3(std::mt19937_64& rng, double lo, double hi) {
    return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

Eigen::Vector3d gaussian3(std::mt19937_64& rng, double sigma) {
    return {gaussian(rng, sigma), gaussian(rng, sigma), gaussian(rng, sigma)};
}

// Exact state under a constant snap (the chain integrates in closed form).
IntegratorState exact_flow(const IntegratorState& q, const Eigen::Vector3d& v, double t) {
    IntegratorState out;
    out.r = q.r + t * q.dr + t * t / 2.0 * q.ddr + t * t * t / 6.0 * q.dddr +
            t * t * t * t / 24.0 * v;
    out.dr = q.dr + t * q.ddr + t * t / 2.0 * q.dddr + t * t * t / 6.0 * v;
    out.ddr = q.ddr + t * q.dddr + t * t / 2.0 * v;
    out.dddr = q.dddr + t * v;
    return out;
}

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
    Eigen::Matrix3d m;
    m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return m;
}

// Scalar polynomial in Taylor form: p(t) = sum a_k t^k / k!.
struct TaylorPoly {
    std::array<double, 8> a{};

    double deriv(int order, double t) const {
        double acc = 0.0;
        double term = 1.0;  // t^(k-order) / (k-order)!
        for (int k = order; k <= 7; ++k) {
            acc += a[static_cast<std::size_t>(k)] * term;
            term = term * t / (k - order + 1);
        }
        return acc;
    }
};

struct PolyTrajectory {
    std::array<TaylorPoly, 3> axes;

    FlatSample at(double t) const {
        FlatSample s;
        for (int axis = 0; axis < 3; ++axis) {
            const TaylorPoly& p = axes[static_cast<std::size_t>(axis)];
            s.r(axis) = p.deriv(0, t);
            s.dr(axis) = p.deriv(1, t);
            s.ddr(axis) = p.deriv(2, t);
            s.dddr(axis) = p.deriv(3, t);
            s.ddddr(axis) = p.deriv(4, t);
        }
        return s;
    }
};

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

std::optional<Eigen::VectorXd> brute_force_qp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                              const Eigen::VectorXd& nominal) {
    const int rows = static_cast<int>(a.rows());
    const int dim = static_cast<int>(a.cols());
    const auto feasible = [&](const Eigen::VectorXd& v) {
        for (int k = 0; k < rows; ++k)
            if (a.row(k).dot(v) - b(k) > 1e-9) return false;
        return true;
    };

    std::optional<Eigen::VectorXd> best;
    double best_objective = std::numeric_limits<double>::infinity();
    const auto consider = [&](const Eigen::VectorXd& v) {
        if (!feasible(v)) return;
        const double objective = (v - nominal).squaredNorm();
        if (objective < best_objective) {
            best_objective = objective;
            best = v;
        }
    };

    consider(nominal);
    for (unsigned mask = 1; mask < (1u << rows); ++mask) {
        std::vector<int> subset;
        for (int k = 0; k < rows; ++k)
            if (mask & (1u << k)) subset.push_back(k);
        if (static_cast<int>(subset.size()) > dim) continue;

        Eigen::MatrixXd n(dim, subset.size());
        Eigen::VectorXd b_s(subset.size());
        for (std::size_t w = 0; w < subset.size(); ++w) {
            n.col(static_cast<int>(w)) = a.row(subset[w]).transpose();
            b_s(static_cast<int>(w)) = b(subset[w]);
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(n);
        if (qr.rank() < static_cast<int>(subset.size())) continue;
        const Eigen::VectorXd u =
            (n.transpose() * n).ldlt().solve(n.transpose() * nominal - b_s);
        consider(nominal - n * u);
    }
    return best;
}

FuzzReport feasibility_fuzz(std::uint64_t seed, int trials) {
    FuzzReport report;
    report.suite = "feasibility_probe";
    report.trials = trials;
    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng = seeded_engine(seed, static_cast<std::uint64_t>(trial));
        const int m = 2 + static_cast<int>(rng() % 5);

        SafetyGeometry geom;
        geom.ds = uniform(rng, 0.15, 0.35);
        geom.c = uniform(rng, 1.0, 3.0);
        geom.shape = (trial % 2 == 0) ? SafetyShape::kRectangle : SafetyShape::kCylinder;

        std::array<double, 4> poles{};
        for (double& p : poles) p = uniform(rng, 0.5, 4.0);
        const GainRow gains = place_poles(poles);

        std::vector<IntegratorState> states;
        while (static_cast<int>(states.size()) < m) {
            IntegratorState q;
            q.r = uniform3(rng, -2.0, 2.0);
            const bool clear = std::all_of(states.begin(), states.end(), [&](const IntegratorState& other) {
                return barrier_value(other, q, geom) > 0.0;
            });
            if (!clear) continue;
            q.dr = gaussian3(rng, 1.0);
            q.ddr = gaussian3(rng, 2.0);
            q.dddr = gaussian3(rng, 5.0);
            states.push_back(q);
        }

        try {
            const Eigen::VectorXd witness = feasibility_probe(states, geom, gains);
            if (witness.allFinite()) {
                ++report.passed;
            } else {
                ++report.failed;
            }
        } catch (const DegenerateGeometryError&) {
            ++report.rejected;
            continue;
        } catch (const ValidationError&) {
            ++report.rejected;
            continue;
        } catch (const std::exception& e) {
            ++report.failed;
            if (report.first_failure.empty()) {
                json instance;
                instance["trial"] = trial;
                instance["error"] = e.what();
                instance["m"] = m;
                instance["D_s"] = geom.ds;
                instance["c"] = geom.c;
                instance["shape"] = geom.shape == SafetyShape::kRectangle ? "rectangle" : "cylinder";
                for (const IntegratorState& q : states) instance["states"].push_back(state_json(q));
                report.first_failure = instance.dump();
            }
        }
    }
    return report;
}

FuzzReport qp_oracle_fuzz(std::uint64_t seed, int trials) {
    FuzzReport report;
    report.suite = "qp_oracle";
    report.trials = trials;
    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng = seeded_engine(seed, 0x9000 + static_cast<std::uint64_t>(trial));
        const int dim = 3 * (1 + static_cast<int>(rng() % 3));
        const int rows = static_cast<int>(rng() % 6);

        Eigen::MatrixXd a(rows, dim);
        Eigen::VectorXd b(rows);
        Eigen::VectorXd nominal(dim);
        for (int i = 0; i < dim; ++i) nominal(i) = gaussian(rng, 2.0);
        for (int k = 0; k < rows; ++k) {
            for (int i = 0; i < dim; ++i) a(k, i) = gaussian(rng, 1.0);
            b(k) = a.row(k).dot(nominal) + uniform(rng, -1.5, 1.5);
        }

        RectificationProblem problem;
        problem.nominal = nominal;
        for (int k = 0; k < rows; ++k) {
            BarrierConstraint c;
            c.i = 0;
            c.j = k + 1;
            c.row = a.row(k).transpose();
            c.bound = b(k);
            problem.constraints.push_back(c);
        }

        std::optional<Eigen::VectorXd> solver_v;
        double kkt = 0.0;
        try {
            QpRectifier rectifier;
            RectifiedControl control = rectifier.solve(problem);
            solver_v = control.v;
            kkt = control.kkt_residual;
        } catch (const InfeasibleError&) {
        }
        const std::optional<Eigen::VectorXd> oracle_v = brute_force_qp(a, b, nominal);

        bool ok = false;
        if (solver_v && oracle_v)
            ok = ((*solver_v - *oracle_v).cwiseAbs().maxCoeff() <= 1e-6) && kkt <= 1e-6;
        else
            ok = !solver_v && !oracle_v;

        if (ok) {
            ++report.passed;
        } else {
            ++report.failed;
            if (report.first_failure.empty()) {
                json instance;
                instance["trial"] = trial;
                instance["nominal"] = vec_json(nominal);
                instance["b"] = vec_json(b);
                instance["rows"] = json::array();
                for (int k = 0; k < rows; ++k) instance["rows"].push_back(vec_json(a.row(k).transpose()));
                if (solver_v) instance["solver"] = vec_json(*solver_v);
                if (oracle_v) instance["oracle"] = vec_json(*oracle_v);
                instance["kkt"] = kkt;
                report.first_failure = instance.dump();
            }
        }
    }
    return report;
}

FuzzReport lie_derivative_fuzz(std::uint64_t seed, int trials) {
    FuzzReport report;
    report.suite = "lie_derivative";
    report.trials = trials;
    const GainRow gains = place_poles({2.0, 2.2, 2.4, 2.6});
    const double tau = 1e-2;
    const double stencil[7] = {-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0};

    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng = seeded_engine(seed, 0x11000 + static_cast<std::uint64_t>(trial));

        SafetyGeometry geom;
        geom.ds = uniform(rng, 0.15, 0.35);
        geom.c = uniform(rng, 1.0, 3.0);
        geom.shape = (trial % 2 == 0) ? SafetyShape::kRectangle : SafetyShape::kCylinder;

        IntegratorState qi, qj;
        Eigen::Vector3d vi, vj;
        double analytic = 0.0;
        BarrierConstraint row;
        // Resample until the pair is clearly separated and the target
        // derivative is away from zero, so a relative tolerance is
        // meaningful.
        while (true) {
            qi.r = uniform3(rng, -1.5, 1.5);
            qj.r = uniform3(rng, -1.5, 1.5);
            if ((qi.r - qj.r).norm() < 0.1) continue;
            qi.dr = gaussian3(rng, 1.0);
            qj.dr = gaussian3(rng, 1.0);
            qi.ddr = gaussian3(rng, 1.0);
            qj.ddr = gaussian3(rng, 1.0);
            qi.dddr = gaussian3(rng, 1.0);
            qj.dddr = gaussian3(rng, 1.0);
            vi = gaussian3(rng, 2.0);
            vj = gaussian3(rng, 2.0);
            row = constraint_row(qi, qj, geom, gains, 0, 1, 2);
            Eigen::VectorXd v(6);
            v << vi, vj;
            analytic = row.bound - gains.k.dot(eta(qi, qj, geom).stacked()) - row.row.dot(v);
            if (std::abs(analytic) >= 0.1) break;
        }

        double fd = 0.0;
        for (int p = -3; p <= 3; ++p) {
            const double h = barrier_value(exact_flow(qi, vi, p * tau), exact_flow(qj, vj, p * tau), geom);
            fd += stencil[p + 3] * h;
        }
        fd /= 6.0 * tau * tau * tau * tau;

        const double rel = std::abs(fd - analytic) / std::abs(analytic);
        if (rel <= 1e-3) {
            ++report.passed;
        } else {
            ++report.failed;
            if (report.first_failure.empty()) {
                json instance;
                instance["trial"] = trial;
                instance["qi"] = state_json(qi);
                instance["qj"] = state_json(qj);
                instance["vi"] = vec_json(vi);
                instance["vj"] = vec_json(vj);
                instance["D_s"] = geom.ds;
                instance["c"] = geom.c;
                instance["shape"] = geom.shape == SafetyShape::kRectangle ? "rectangle" : "cylinder";
                instance["analytic"] = analytic;
                instance["fd"] = fd;
                report.first_failure = instance.dump();
            }
        }
    }
    return report;
}

FuzzReport flatness_fuzz(std::uint64_t seed, int trials) {
    FuzzReport report;
    report.suite = "flatness_consistency";
    report.trials = trials;
    const VehicleParams params;
    const double tau = 1e-5;

    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng = seeded_engine(seed, 0x21000 + static_cast<std::uint64_t>(trial));
        PolyTrajectory traj;
        for (auto& poly : traj.axes) {
            poly.a[0] = uniform(rng, -1.0, 1.0);
            poly.a[1] = uniform(rng, -1.0, 1.0);
            for (int k = 2; k <= 7; ++k) poly.a[static_cast<std::size_t>(k)] = uniform(rng, -1.5, 1.5);
        }

        bool ok = true;
        std::string reason;
        for (const double t : {0.25, 0.5, 0.75}) {
            const FullState mid = flat_to_state(traj.at(t), params);
            const ControlInput input = flat_to_input(traj.at(t), params);
            const FullState fwd = flat_to_state(traj.at(t + tau), params);
            const FullState bwd = flat_to_state(traj.at(t - tau), params);

            const Eigen::Matrix3d r_dot_fd = (fwd.attitude - bwd.attitude) / (2.0 * tau);
            const double rotation_residual = (r_dot_fd - mid.attitude * hat(mid.omega)).norm();
            const Eigen::Vector3d omega_dot_fd = (fwd.omega - bwd.omega) / (2.0 * tau);
            const double omega_residual = (omega_dot_fd - input.omega_dot).norm();

            const Eigen::Vector3d accel = traj.at(t).ddr;
            const Eigen::Vector3d accel_up(accel.x(), -accel.y(), -accel.z());
            const Eigen::Vector3d newton = params.mass * accel_up -
                                           (input.f_z * mid.attitude.col(2) -
                                            params.mass * params.gravity * Eigen::Vector3d::UnitZ());
            const double ortho =
                (mid.attitude.transpose() * mid.attitude - Eigen::Matrix3d::Identity()).norm();

            if (rotation_residual >= 1e-4) reason = "rotation_fd";
            if (omega_residual >= 1e-3) reason = "omega_dot_fd";
            if (newton.norm() >= 1e-9) reason = "newton_residual";
            if (ortho >= 1e-10) reason = "orthonormality";
            ok = ok && reason.empty();
            if (!ok) break;
        }

        if (ok) {
            ++report.passed;
        } else {
            ++report.failed;
            if (report.first_failure.empty()) {
                json instance;
                instance["trial"] = trial;
                instance["check"] = reason;
                for (const auto& poly : traj.axes) {
                    json coeffs = json::array();
                    for (double c : poly.a) coeffs.push_back(c);
                    instance["axes"].push_back(coeffs);
                }
                report.first_failure = instance.dump();
            }
        }
    }
    return report;
}

FuzzReport pole_placement_fuzz(std::uint64_t seed, int trials) {
    FuzzReport report;
    report.suite = "pole_placement";
    report.trials = trials;
    const ChainMatrices chain = chain_matrices();

    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng = seeded_engine(seed, 0x31000 + static_cast<std::uint64_t>(trial));
        std::array<double, 4> poles{};
        while (true) {
            for (double& p : poles) p = uniform(rng, 0.5, 5.0);
            std::array<double, 4> sorted = poles;
            std::sort(sorted.begin(), sorted.end());
            const double gap = std::min({sorted[1] - sorted[0], sorted[2] - sorted[1],
                                         sorted[3] - sorted[2]});
            if (gap >= 0.3) break;
        }

        const GainRow gains = place_poles(poles);
        const Eigen::Matrix4d closed = chain.f - chain.g * gains.k.transpose();
        const Eigen::EigenSolver<Eigen::Matrix4d> eig(closed);

        std::array<double, 4> expected = poles;
        for (double& p : expected) p = -p;
        std::sort(expected.begin(), expected.end());
        std::array<std::pair<double, double>, 4> computed;
        for (int i = 0; i < 4; ++i)
            computed[static_cast<std::size_t>(i)] = {eig.eigenvalues()(i).real(),
                                                     eig.eigenvalues()(i).imag()};
        std::sort(computed.begin(), computed.end());

        double worst = 0.0;
        for (int i = 0; i < 4; ++i) {
            worst = std::max(worst, std::abs(computed[static_cast<std::size_t>(i)].first -
                                             expected[static_cast<std::size_t>(i)]));
            worst = std::max(worst, std::abs(computed[static_cast<std::size_t>(i)].second));
        }

        if (worst <= 1e-9) {
            ++report.passed;
        } else {
            ++report.failed;
            if (report.first_failure.empty()) {
                json instance;
                instance["trial"] = trial;
                instance["poles"] = json::array({poles[0], poles[1], poles[2], poles[3]});
                instance["worst"] = worst;
                report.first_failure = instance.dump();
            }
        }
    }
    return report;
}

ScenarioConfig random_scenario(std::uint64_t seed) {
    for (std::uint64_t attempt = 0; attempt < 50; ++attempt) {
        std::mt19937_64 rng = seeded_engine(seed, 0x41000 + attempt);
        ScenarioConfig config;
        config.name = "random_" + std::to_string(seed);
        config.duration = 4.0;
        config.geometry.ds = uniform(rng, 0.2, 0.3);
        config.geometry.c = uniform(rng, 1.5, 2.5);
        config.geometry.shape = (seed % 2 == 0) ? SafetyShape::kRectangle : SafetyShape::kCylinder;
        const int ks_pick = static_cast<int>(rng() % 3);
        config.k_s = ks_pick == 0 ? 0.0 : (ks_pick == 1 ? 50.0 : 100.0);
        if (rng() % 3 == 0) config.snap_bound = uniform(rng, 40.0, 90.0);

        const int m = 2 + static_cast<int>(rng() % 4);
        const double ring = uniform(rng, 0.8, 1.2);
        for (int i = 0; i < m; ++i) {
            const double angle = 2.0 * kPi * i / m + uniform(rng, -0.2, 0.2);
            const double z = -0.8 + uniform(rng, -0.2, 0.2);
            const Eigen::Vector3d base(ring * std::cos(angle), ring * std::sin(angle), z);

            ReferenceSpec spec;
            const int kind = static_cast<int>(rng() % 3);
            if (kind == 0) {
                spec.kind = ReferenceSpec::Kind::kHover;
                spec.hover = base;
            } else if (kind == 1) {
                spec.kind = ReferenceSpec::Kind::kCircle;
                spec.radius = uniform(rng, 0.15, 0.35);
                spec.rate = (rng() % 2 == 0 ? 1.0 : -1.0) * uniform(rng, 0.4, 0.9);
                spec.phase = angle;
                spec.z = z;
                spec.center = base.head<2>() -
                              spec.radius * Eigen::Vector2d(std::cos(angle), std::sin(angle));
            } else {
                spec.kind = ReferenceSpec::Kind::kBezier;
                spec.p0 = base;
                spec.p1 = Eigen::Vector3d(-base.x(), -base.y(), z + uniform(rng, -0.1, 0.1));
                spec.T = uniform(rng, 2.5, 4.5);
            }
            config.references.push_back(spec);
            config.initial.push_back(spec.start_state());
        }

        try {
            config.validate();
            bool separated = true;
            for (std::size_t i = 0; i < config.initial.size() && separated; ++i)
                for (std::size_t j = i + 1; j < config.initial.size() && separated; ++j)
                    separated = barrier_value(config.initial[i], config.initial[j],
                                              config.geometry) > 0.0;
            if (!separated) continue;
            const GainRow gains = place_poles(config.poles);
            if (!check_initial_conditions(config.initial, config.geometry, gains).pass) continue;
            return config;
        } catch (const ValidationError&) {
            continue;
        } catch (const DegenerateGeometryError&) {
            continue;
        }
    }

    // Hover ring fallback: rest states on a wide circle always pass.
    std::mt19937_64 rng = seeded_engine(seed, 0x51000);
    ScenarioConfig config;
    config.name = "random_" + std::to_string(seed);
    config.duration = 4.0;
    const int m = 2 + static_cast<int>(rng() % 4);
    for (int i = 0; i < m; ++i) {
        const double angle = 2.0 * kPi * i / m;
        ReferenceSpec spec;
        spec.kind = ReferenceSpec::Kind::kHover;
        spec.hover = Eigen::Vector3d(std::cos(angle), std::sin(angle), -0.8);
        config.references.push_back(spec);
        config.initial.push_back(spec.start_state());
    }
    return config;
}

}  // namespace sbc
