#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "woc/grid/per_unit.hpp"

namespace woc::powerflow {

using grid::Complex;
using grid::PerUnitNetwork;

/// Raised when the Newton step cannot be solved.
class SingularJacobianError : public std::runtime_error {
 public:
  SingularJacobianError(int iteration, double rcond);
  int iteration() const noexcept { return iteration_; }
  double rcond() const noexcept { return rcond_; }

 private:
  int iteration_;
  double rcond_;
};

class PowerFlowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Partial derivatives of the bus power equations in polar coordinates.
/// Rows/columns of j1..j4 follow `pvpq` (angles, P equations) and `pq`
/// (magnitudes, Q equations), both in ascending bus index order.
struct Jacobian {
  Eigen::MatrixXd j1;  // dP/d(delta)
  Eigen::MatrixXd j2;  // dP/dv
  Eigen::MatrixXd j3;  // dQ/d(delta)
  Eigen::MatrixXd j4;  // dQ/dv
  std::vector<std::size_t> pvpq;
  std::vector<std::size_t> pq;

  Eigen::MatrixXd full() const;
};

struct BranchFlow {
  Complex s_from;  // pu, into the branch at the from end
  Complex s_to;    // pu, into the branch at the to end
};

struct OperatingPoint {
  std::vector<double> v;
  std::vector<double> delta;
};

struct PowerFlowSolution {
  std::vector<double> v;      // pu
  std::vector<double> delta;  // rad
  std::vector<double> p_inj;  // pu, computed at the final point
  std::vector<double> q_inj;
  std::vector<BranchFlow> branch_flows;
  double total_losses_mw = 0.0;
  double max_mismatch = 0.0;
  double base_mva = 100.0;
  int iterations = 0;
  bool converged = false;
  // Set when the iterate left the physical region (v <= 0 or non-finite).
  bool collapsed = false;

  OperatingPoint operating_point() const { return {v, delta}; }
};

struct SolveOptions {
  double tolerance = 1e-8;  // pu mismatch, infinity norm
  int max_iterations = 30;
  std::optional<OperatingPoint> warm_start;
};

/// Bus injections S_i = V_i conj(sum_k Y_ik V_k).
std::vector<Complex> bus_power(const Eigen::MatrixXcd& y, const std::vector<double>& v,
                               const std::vector<double>& delta);

Jacobian jacobian(const PerUnitNetwork& net, const std::vector<double>& v,
                  const std::vector<double>& delta);
Jacobian jacobian(const Eigen::MatrixXcd& y, const PerUnitNetwork& net,
                  const std::vector<double>& v, const std::vector<double>& delta);

/// Full Newton-Raphson. Iterations count mismatch evaluations, so a case
/// whose starting point already meets the tolerance reports 1.
/// Non-convergence is reported in the result; a Jacobian that is singular
/// at the starting point throws SingularJacobianError.
PowerFlowSolution solve_power_flow(const PerUnitNetwork& net, const SolveOptions& options = {});

struct Setpoint {
  double p_mw = 0.0;
  double q_mvar = 0.0;
};
using Setpoints = std::map<std::string, Setpoint>;

class SetpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Returns a copy with the named generators' injections replaced.
PerUnitNetwork apply_setpoints(const PerUnitNetwork& net, const Setpoints& setpoints);

/// Generation minus load (slack included). Throws on a non-converged solution.
double total_losses(const PowerFlowSolution& sol);

/// Sum of series I^2 R over all branches, computed from the branch flows.
double branch_losses_mw(const PowerFlowSolution& sol);

}  // namespace woc::powerflow
