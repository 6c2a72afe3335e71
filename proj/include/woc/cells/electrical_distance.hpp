#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "woc/powerflow/power_flow.hpp"

namespace woc::cells {

class CellError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Voltage response to reactive injection over the PQ buses:
/// b(i, j) = du_i / dQ_j, the inverse of the dQ/dv Jacobian block.
struct SensitivityMatrix {
  Eigen::MatrixXd b;
  std::vector<std::string> buses;
  double residual = 0.0;  // ||j4 * b - I||_inf
  double rcond = 0.0;
};

/// a(i, j) = b(i, j) / b(j, j); unit diagonal.
struct AttenuationMatrix {
  Eigen::MatrixXd a;
  std::vector<std::string> buses;
  // Entries outside (0, 1], reported but kept.
  std::vector<std::string> diagnostics;
};

struct DistanceMatrix {
  Eigen::MatrixXd d;
  std::vector<std::string> buses;
  bool normalized = false;
  std::vector<std::string> diagnostics;
};

/// Default distance assigned where a(i,j) * a(j,i) <= 0.
inline constexpr double kDistanceCap = 1e6;

SensitivityMatrix sensitivity_matrix(const Eigen::MatrixXd& j4, std::vector<std::string> buses);
SensitivityMatrix sensitivity_matrix(const powerflow::Jacobian& jac, const grid::PerUnitNetwork& net);

AttenuationMatrix attenuation_matrix(const SensitivityMatrix& s);

/// D(i, j) = -log(a(i, j) * a(j, i)); symmetric by construction.
DistanceMatrix electrical_distance(const AttenuationMatrix& a, double cap = kDistanceCap);

/// Divides each row by its maximum.
DistanceMatrix normalize_distance(const DistanceMatrix& d);

/// Runs the full chain from a solved operating point.
struct DistancePipeline {
  SensitivityMatrix sensitivity;
  AttenuationMatrix attenuation;
  DistanceMatrix raw;
  DistanceMatrix normalized;
};

DistancePipeline distance_pipeline(const grid::PerUnitNetwork& net,
                                   const powerflow::PowerFlowSolution& operating_point);

/// Number of entries strictly greater than `threshold`.
std::size_t count_above(const DistanceMatrix& d, double threshold);

}  // namespace woc::cells
