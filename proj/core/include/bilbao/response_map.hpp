#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "bilbao/acquisition.hpp"
#include "bilbao/gp.hpp"
#include "bilbao/rng.hpp"

namespace bilbao {

/// Estimated lower-level best response over a discretized upper grid X_D.
struct ResponseMap {
  Eigen::MatrixXd upper_grid;  // |X_D| x d_u
  Eigen::MatrixXd responses;   // |X_D| x d_l, Phi(x_u) per row
  Eigen::VectorXd values;      // lower posterior mean at (x_u, Phi(x_u))

  int size() const { return static_cast<int>(upper_grid.rows()); }
  bool empty() const { return upper_grid.rows() == 0; }
  /// Rows (x_u, Phi(x_u)).
  Eigen::MatrixXd joint_points() const;
};

/// argmax over x_l of the lower posterior mean at fixed x_u.
///
/// Runs the bounded quasi-Newton optimizer from `restarts` Sobol start points
/// (fixed scramble, so repeated calls agree) and keeps the best result.
Eigen::VectorXd estimate_phi(const GPModel& gp_l, const Eigen::VectorXd& x_u, int restarts = 30);

/// estimate_phi at every grid row.
ResponseMap build_map(const GPModel& gp_l, const Eigen::MatrixXd& upper_grid, int restarts = 30);

struct MapSelection {
  std::size_t index = 0;
  Eigen::VectorXd upper;
};

/// Maximizer of one draw of the upper sample path restricted to the map.
MapSelection restricted_ts_argmax(const GPModel& gp_u, const ResponseMap& map, RngStream& stream);

/// k restricted Thompson maximizers (duplicates kept) with uniform weights.
InterestSet sample_interest_set(const GPModel& gp_u, const ResponseMap& map, int k,
                                RngStream& stream);

/// Grid point maximizing the upper posterior mean along the map.
MapSelection recommend(const GPModel& gp_u, const ResponseMap& map);

}  // namespace bilbao
