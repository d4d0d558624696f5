#pragma once

#include <array>
#include <memory>

#include <Eigen/Core>

#include "sbc/flatness.hpp"

namespace sbc {

// A C4 flat reference. eval() reports derivatives with respect to the
// trajectory parameter; time scaling under the virtual clock is applied
// by eval_parameterized.
class ReferenceTrajectory {
public:
    virtual ~ReferenceTrajectory() = default;
    virtual FlatSample eval(double u) const = 0;
    // Parameter value after which the trajectory holds its endpoint;
    // infinite for periodic or stationary primitives.
    virtual double duration() const = 0;
};

class HoverRef final : public ReferenceTrajectory {
public:
    explicit HoverRef(const Eigen::Vector3d& point) : point_(point) {}
    FlatSample eval(double) const override;
    double duration() const override;

private:
    Eigen::Vector3d point_;
};

class CircleRef final : public ReferenceTrajectory {
public:
    CircleRef(double radius, double angular_rate, double phase, double z,
              const Eigen::Vector2d& center = Eigen::Vector2d::Zero());
    FlatSample eval(double u) const override;
    double duration() const override;

private:
    double radius_;
    double rate_;
    double phase_;
    Eigen::Vector3d center_;
};

// Degree-9 Bezier between two rest states: the first and last five
// control points coincide with the endpoints, so derivatives 1..4 vanish
// there. Evaluation clamps outside [0, T] and holds the endpoint.
class BezierRef final : public ReferenceTrajectory {
public:
    BezierRef(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1, double T);
    FlatSample eval(double u) const override;
    double duration() const override;

private:
    std::array<std::array<Eigen::Vector3d, 10>, 5> diff_points_;  // order 0..4
    double T_;
};

std::unique_ptr<ReferenceTrajectory> bezier_interp(const Eigen::Vector3d& p0,
                                                   const Eigen::Vector3d& p1, double T);
std::unique_ptr<ReferenceTrajectory> circle_ref(double radius, double angular_rate, double phase,
                                                double z,
                                                const Eigen::Vector2d& center =
                                                    Eigen::Vector2d::Zero());
std::unique_ptr<ReferenceTrajectory> hover_ref(const Eigen::Vector3d& point);

// Virtual time of one vehicle's reference point. The clock slows down
// exponentially with tracking error and never outruns real time.
struct VirtualClock {
    double s = 0.0;
    double k_s = 0.0;  // 1/m^2
    double ds = 1.0;   // rate realized by the last step
};

VirtualClock clock_step(const VirtualClock& clock, const Eigen::Vector3d& e_r, double dt);

// Reference sample at the clock's virtual time, with derivatives rescaled
// by powers of the clock rate (the rate is treated as constant across one
// control step).
FlatSample eval_parameterized(const ReferenceTrajectory& traj, const VirtualClock& clock);

}  // namespace sbc
