#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tabletop::kinematics {

struct JointLimit {
    double min = -3.141592653589793;
    double max = 3.141592653589793;
};

/// Planar serial arm. Angles are relative, each measured from the previous link.
struct ArmModel {
    std::vector<double> lengths;
    std::vector<double> angles;
    std::vector<JointLimit> limits;
    double base_x = 0.0;
    double base_y = 0.0;

    size_t joints() const { return lengths.size(); }
    double reach() const;
    /// Smallest distance from the base the arm can reach (0 when links can fold back fully).
    double inner_reach() const;
};

/// Arm with the given links, zero angles and [-pi, pi] limits.
ArmModel make_arm(std::vector<double> lengths, double base_x = 0.0, double base_y = 0.0);

/// Three-link arm used by the skill executor: L = [0.25, 0.2, 0.15] at the
/// origin, resting in a bent home pose (the straight pose is singular).
ArmModel default_arm();

/// Throws PreconditionError unless n >= 1, lengths > 0, vectors agree in size,
/// limits are ordered and every angle lies within its limit.
void validate(const ArmModel& arm);

Eigen::Vector2d forward_kinematics(const ArmModel& arm);
Eigen::Vector2d forward_kinematics(const ArmModel& arm, const Eigen::VectorXd& theta);

/// 2 x n analytic Jacobian of the end-effector position.
Eigen::MatrixXd jacobian(const ArmModel& arm);
Eigen::MatrixXd jacobian(const ArmModel& arm, const Eigen::VectorXd& theta);

struct IkOptions {
    double damping = 0.1;
    double tolerance = 1e-4;
    int max_iters = 200;
    double max_step = 0.1;  // task-space error is scaled down to this norm per iteration, m; <= 0 disables
};

/// Bring an angle back inside its limit: joints whose range spans a full turn
/// are continuous and wrap, the rest clamp.
double limit_angle(double angle, const JointLimit& limit);

struct IkSolution {
    std::vector<double> theta;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string diagnostic;
    std::vector<std::vector<double>> trajectory;  // every accepted iterate, start included
};

/// Damped least squares from the arm's current angles. Returns the iterate
/// with the smallest residual. Targets outside the reachable annulus return
/// immediately with converged=false.
IkSolution solve_ik(const ArmModel& arm, const Eigen::Vector2d& target, const IkOptions& options = {});

}  // namespace tabletop::kinematics
