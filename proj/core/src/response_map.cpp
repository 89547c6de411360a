#include "bilbao/response_map.hpp"

#include <limits>
#include <string>

#include "bilbao/errors.hpp"
#include "bilbao/optimize.hpp"
#include "bilbao/sampling.hpp"
#include "bilbao/sobol.hpp"

namespace bilbao {

namespace {

constexpr std::uint64_t kPhiStartSeed = 0x7068692D73746172ULL;

Eigen::MatrixXd phi_starts(int d_l, int restarts) {
  RngStream stream(kPhiStartSeed, static_cast<std::uint64_t>(d_l));
  return sobol_points(d_l, restarts, stream);
}

Eigen::VectorXd optimize_slice(const GPModel& gp_l, const Eigen::VectorXd& x_u,
                               const Eigen::MatrixXd& starts) {
  const int d_u = static_cast<int>(x_u.size());
  const int d_l = gp_l.dim() - d_u;
  if (d_l < 1) throw DataError("lower model dimension must exceed the upper dimension");

  Eigen::VectorXd joint(gp_l.dim());
  joint.head(d_u) = x_u;
  Eigen::VectorXd full_grad(gp_l.dim());
  const SmoothObjective negative_mean = [&](const Eigen::VectorXd& x_l, Eigen::VectorXd* grad) {
    joint.tail(d_l) = x_l;
    const double m = gp_l.mean_gradient(joint, full_grad);
    if (grad) *grad = -full_grad.tail(d_l);
    return -m;
  };
  QuasiNewtonOptions qn;
  qn.max_iterations = 50;
  qn.gradient_tolerance = 1e-7;
  qn.value_tolerance = 1e-12;

  const Box box = Box::unit(d_l);
  Eigen::VectorXd best;
  double best_value = std::numeric_limits<double>::infinity();
  for (Eigen::Index s = 0; s < starts.rows(); ++s) {
    const LocalResult r = minimize_box(negative_mean, starts.row(s).transpose(), box, qn);
    if (r.value < best_value) {
      best_value = r.value;
      best = r.x;
    }
  }
  return best;
}

}  // namespace

Eigen::MatrixXd ResponseMap::joint_points() const {
  Eigen::MatrixXd out(upper_grid.rows(), upper_grid.cols() + responses.cols());
  out << upper_grid, responses;
  return out;
}

Eigen::VectorXd estimate_phi(const GPModel& gp_l, const Eigen::VectorXd& x_u, int restarts) {
  if (restarts < 1) throw ConfigError("phi restarts must be at least 1");
  const int d_l = gp_l.dim() - static_cast<int>(x_u.size());
  if (d_l < 1) throw DataError("lower model dimension must exceed the upper dimension");
  return optimize_slice(gp_l, x_u, phi_starts(d_l, restarts));
}

ResponseMap build_map(const GPModel& gp_l, const Eigen::MatrixXd& upper_grid, int restarts) {
  if (upper_grid.rows() < 1) throw DataError("response map grid is empty");
  if (restarts < 1) throw ConfigError("phi restarts must be at least 1");
  const Eigen::Index d_u = upper_grid.cols();
  const int d_l = gp_l.dim() - static_cast<int>(d_u);
  if (d_l < 1) throw DataError("lower model dimension must exceed the upper dimension");
  const Eigen::MatrixXd starts = phi_starts(d_l, restarts);

  ResponseMap map;
  map.upper_grid = upper_grid;
  map.responses.resize(upper_grid.rows(), d_l);
  for (Eigen::Index i = 0; i < upper_grid.rows(); ++i)
    map.responses.row(i) = optimize_slice(gp_l, upper_grid.row(i).transpose(), starts).transpose();
  map.values = gp_l.means(map.joint_points());
  return map;
}

MapSelection restricted_ts_argmax(const GPModel& gp_u, const ResponseMap& map, RngStream& stream) {
  if (map.empty()) throw DataError("response map is empty");
  const ThompsonDraw pick = thompson_argmax(gp_u, map.joint_points(), stream);
  return {pick.index, map.upper_grid.row(static_cast<Eigen::Index>(pick.index)).transpose()};
}

InterestSet sample_interest_set(const GPModel& gp_u, const ResponseMap& map, int k,
                                RngStream& stream) {
  if (k < 1) throw ConfigError("interest set size must be at least 1");
  if (map.empty()) throw DataError("response map is empty");
  const JointPosteriorSampler sampler(gp_u, map.joint_points());
  Eigen::MatrixXd points(k, map.upper_grid.cols());
  for (int i = 0; i < k; ++i)
    points.row(i) = map.upper_grid.row(static_cast<Eigen::Index>(sampler.argmax(stream).index));
  return InterestSet::uniform(std::move(points));
}

MapSelection recommend(const GPModel& gp_u, const ResponseMap& map) {
  if (map.empty()) throw DataError("response map is empty");
  const Eigen::VectorXd restricted = gp_u.means(map.joint_points());
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < restricted.size(); ++i)
    if (restricted[i] > restricted[best]) best = i;
  return {static_cast<std::size_t>(best), map.upper_grid.row(best).transpose()};
}

}  // namespace bilbao
