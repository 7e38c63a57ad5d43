#include "tabletop/kinematics/arm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabletop/common/error.hpp"

namespace tabletop::kinematics {
namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size())); }

std::vector<double> to_std(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

constexpr double kTwoPi = 6.283185307179586;

}  // namespace

double limit_angle(double angle, const JointLimit& limit) {
    if (limit.max - limit.min >= kTwoPi) {
        double a = std::fmod(angle - limit.min, kTwoPi);
        if (a < 0.0) a += kTwoPi;
        return limit.min + a;
    }
    return std::clamp(angle, limit.min, limit.max);
}

double ArmModel::reach() const { return std::accumulate(lengths.begin(), lengths.end(), 0.0); }

double ArmModel::inner_reach() const {
    if (lengths.empty()) return 0.0;
    const double longest = *std::max_element(lengths.begin(), lengths.end());
    return std::max(0.0, 2.0 * longest - reach());
}

ArmModel make_arm(std::vector<double> lengths, double base_x, double base_y) {
    ArmModel arm;
    arm.angles.assign(lengths.size(), 0.0);
    arm.limits.assign(lengths.size(), JointLimit{});
    arm.lengths = std::move(lengths);
    arm.base_x = base_x;
    arm.base_y = base_y;
    return arm;
}

ArmModel default_arm() {
    ArmModel arm = make_arm({0.25, 0.2, 0.15});
    arm.angles = {-0.5, 1.0, 1.0};
    return arm;
}

void validate(const ArmModel& arm) {
    const size_t n = arm.lengths.size();
    if (n == 0) throw PreconditionError("arm needs at least one link");
    if (arm.angles.size() != n || arm.limits.size() != n) throw PreconditionError("arm lengths, angles and limits differ in size");
    for (size_t i = 0; i < n; ++i) {
        if (!(arm.lengths[i] > 0.0)) throw PreconditionError("link lengths must be positive");
        if (!(arm.limits[i].min <= arm.limits[i].max)) throw PreconditionError("joint limit min exceeds max");
        if (arm.angles[i] < arm.limits[i].min || arm.angles[i] > arm.limits[i].max) throw PreconditionError("joint angle outside its limit");
    }
}

Eigen::Vector2d forward_kinematics(const ArmModel& arm) { return forward_kinematics(arm, to_vector(arm.angles)); }

Eigen::Vector2d forward_kinematics(const ArmModel& arm, const Eigen::VectorXd& theta) {
    Eigen::Vector2d p(arm.base_x, arm.base_y);
    double phi = 0.0;
    for (size_t i = 0; i < arm.lengths.size(); ++i) {
        phi += theta[static_cast<long>(i)];
        p += arm.lengths[i] * Eigen::Vector2d(std::cos(phi), std::sin(phi));
    }
    return p;
}

Eigen::MatrixXd jacobian(const ArmModel& arm) { return jacobian(arm, to_vector(arm.angles)); }

Eigen::MatrixXd jacobian(const ArmModel& arm, const Eigen::VectorXd& theta) {
    const long n = static_cast<long>(arm.lengths.size());
    // Column j sums the contributions of every link at or after joint j.
    std::vector<double> phi(static_cast<size_t>(n));
    double acc = 0.0;
    for (long i = 0; i < n; ++i) phi[static_cast<size_t>(i)] = (acc += theta[i]);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, n);
    double sx = 0.0, sy = 0.0;
    for (long j = n - 1; j >= 0; --j) {
        sx += arm.lengths[static_cast<size_t>(j)] * std::cos(phi[static_cast<size_t>(j)]);
        sy += arm.lengths[static_cast<size_t>(j)] * std::sin(phi[static_cast<size_t>(j)]);
        J(0, j) = -sy;
        J(1, j) = sx;
    }
    return J;
}

IkSolution solve_ik(const ArmModel& arm, const Eigen::Vector2d& target, const IkOptions& options) {
    validate(arm);
    if (!(options.damping > 0.0)) throw PreconditionError("IK damping must be positive");
    if (!(options.tolerance > 0.0)) throw PreconditionError("IK tolerance must be positive");
    if (options.max_iters < 0) throw PreconditionError("IK max_iters must be non-negative");

    const long n = static_cast<long>(arm.joints());
    Eigen::VectorXd theta = to_vector(arm.angles);
    IkSolution sol;
    sol.trajectory.push_back(arm.angles);

    const double dist = (target - Eigen::Vector2d(arm.base_x, arm.base_y)).norm();
    if (dist > arm.reach() + 1e-12 || dist < arm.inner_reach() - 1e-12) {
        sol.theta = arm.angles;
        sol.residual = (target - forward_kinematics(arm, theta)).norm();
        sol.diagnostic = "target outside the reachable annulus [" + std::to_string(arm.inner_reach()) + ", " + std::to_string(arm.reach()) +
                         "] m (distance " + std::to_string(dist) + " m)";
        return sol;
    }

    Eigen::VectorXd best = theta;
    double best_residual = (target - forward_kinematics(arm, theta)).norm();
    const double lambda2 = options.damping * options.damping;
    int iter = 0;
    while (best_residual > options.tolerance && iter < options.max_iters) {
        ++iter;
        Eigen::Vector2d e = target - forward_kinematics(arm, theta);
        // Large errors linearize badly; walking towards the target in bounded
        // steps keeps the damped update in its useful range.
        if (options.max_step > 0.0 && e.norm() > options.max_step) e *= options.max_step / e.norm();
        const Eigen::MatrixXd J = jacobian(arm, theta);
        const Eigen::Matrix2d A = J * J.transpose() + lambda2 * Eigen::Matrix2d::Identity();
        theta += J.transpose() * A.ldlt().solve(e);
        for (long i = 0; i < n; ++i) theta[i] = limit_angle(theta[i], arm.limits[static_cast<size_t>(i)]);
        sol.trajectory.push_back(to_std(theta));
        const double r = (target - forward_kinematics(arm, theta)).norm();
        if (r < best_residual) {
            best_residual = r;
            best = theta;
        }
    }
    sol.theta = to_std(best);
    sol.residual = best_residual;
    sol.iterations = iter;
    sol.converged = best_residual <= options.tolerance;
    if (!sol.converged) sol.diagnostic = "no convergence after " + std::to_string(iter) + " iterations (residual " + std::to_string(best_residual) + " m)";
    return sol;
}

}  // namespace tabletop::kinematics
