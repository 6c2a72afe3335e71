#include "woc/cells/electrical_distance.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace woc::cells {

SensitivityMatrix sensitivity_matrix(const Eigen::MatrixXd& j4, std::vector<std::string> buses) {
  if (j4.rows() != j4.cols() || j4.rows() == 0) {
    throw CellError(fmt::format("J4 must be square and non-empty, got {}x{}", j4.rows(), j4.cols()));
  }
  if (static_cast<Eigen::Index>(buses.size()) != j4.rows()) {
    throw CellError("bus list does not match J4 dimension");
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(j4);
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double rcond = std::min(lu.rcond(), pivots.minCoeff() / pivots.maxCoeff());
  if (!(rcond > 1e-14)) {
    throw CellError(fmt::format("J4 is singular or ill-conditioned (rcond estimate {:.3g})", rcond));
  }
  SensitivityMatrix s;
  s.b = lu.inverse();
  s.buses = std::move(buses);
  s.rcond = rcond;
  const Eigen::MatrixXd r = j4 * s.b - Eigen::MatrixXd::Identity(j4.rows(), j4.cols());
  s.residual = r.cwiseAbs().rowwise().sum().maxCoeff();
  if (s.residual > 1e-8) {
    throw CellError(fmt::format("J4 inverse residual {:.3g} exceeds 1e-8 (rcond {:.3g})", s.residual, rcond));
  }
  return s;
}

SensitivityMatrix sensitivity_matrix(const powerflow::Jacobian& jac, const grid::PerUnitNetwork& net) {
  std::vector<std::string> ids;
  ids.reserve(jac.pq.size());
  for (auto i : jac.pq) ids.push_back(net.buses[i].id);
  return sensitivity_matrix(jac.j4, std::move(ids));
}

AttenuationMatrix attenuation_matrix(const SensitivityMatrix& s) {
  const auto n = s.b.rows();
  AttenuationMatrix out;
  out.buses = s.buses;
  out.a.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double diag = s.b(j, j);
    if (diag == 0.0) {
      throw CellError(fmt::format("zero diagonal sensitivity at bus '{}'", s.buses[static_cast<std::size_t>(j)]));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      out.a(i, j) = i == j ? 1.0 : s.b(i, j) / diag;
      const double a = out.a(i, j);
      if (!(a > 0.0 && a <= 1.0)) {
        out.diagnostics.push_back(fmt::format("a({}, {}) = {:.6g} outside (0, 1]",
                                              s.buses[static_cast<std::size_t>(i)],
                                              s.buses[static_cast<std::size_t>(j)], a));
      }
    }
  }
  return out;
}

DistanceMatrix electrical_distance(const AttenuationMatrix& a, double cap) {
  const auto n = a.a.rows();
  DistanceMatrix out;
  out.buses = a.buses;
  out.d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double product = a.a(i, j) * a.a(j, i);
      double d = 0.0;
      if (product > 0.0) {
        d = -std::log(product);
      } else {
        d = cap;
        out.diagnostics.push_back(fmt::format("attenuation product for ({}, {}) is {:.6g}; distance capped at {:g}",
                                              a.buses[static_cast<std::size_t>(i)],
                                              a.buses[static_cast<std::size_t>(j)], product, cap));
      }
      out.d(i, j) = d;
      out.d(j, i) = d;
    }
  }
  return out;
}

DistanceMatrix normalize_distance(const DistanceMatrix& d) {
  DistanceMatrix out = d;
  out.normalized = true;
  for (Eigen::Index i = 0; i < d.d.rows(); ++i) {
    const double row_max = d.d.row(i).maxCoeff();
    if (!(row_max > 0.0)) {
      throw CellError(fmt::format("distance row for bus '{}' has no positive entry",
                                  d.buses[static_cast<std::size_t>(i)]));
    }
    out.d.row(i) /= row_max;
  }
  return out;
}

DistancePipeline distance_pipeline(const grid::PerUnitNetwork& net,
                                   const powerflow::PowerFlowSolution& operating_point) {
  const auto jac = powerflow::jacobian(net, operating_point.v, operating_point.delta);
  DistancePipeline p;
  p.sensitivity = sensitivity_matrix(jac, net);
  p.attenuation = attenuation_matrix(p.sensitivity);
  p.raw = electrical_distance(p.attenuation);
  p.normalized = normalize_distance(p.raw);
  return p;
}

std::size_t count_above(const DistanceMatrix& d, double threshold) {
  return static_cast<std::size_t>((d.d.array() > threshold).count());
}

}  // namespace woc::cells
