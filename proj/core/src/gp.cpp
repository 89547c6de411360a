#include "bilbao/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "bilbao/errors.hpp"
#include "bilbao/optimize.hpp"
#include "bilbao/rng.hpp"

namespace bilbao {

namespace {

const double kSqrt5 = std::sqrt(5.0);

// Pairwise squared distances between rows of A and B, both already divided by
// the lengthscales.
Eigen::MatrixXd scaled_sq_dist(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(A.rows(), B.rows());
  for (Eigen::Index k = 0; k < A.cols(); ++k) {
    d2.array() += (A.col(k).replicate(1, B.rows()) -
                   B.col(k).transpose().replicate(A.rows(), 1))
                      .array()
                      .square();
  }
  return d2;
}

Eigen::MatrixXd kernel_from_sq_dist(KernelFamily family, double scale, const Eigen::MatrixXd& d2) {
  if (family == KernelFamily::SquaredExponential) return scale * (-0.5 * d2.array()).exp().matrix();
  const Eigen::ArrayXXd r = d2.array().sqrt();
  return (scale * (1.0 + kSqrt5 * r + (5.0 / 3.0) * d2.array()) * (-kSqrt5 * r).exp()).matrix();
}

// Escalating diagonal jitter; returns the jitter that produced a factorization.
double factorize_with_jitter(const Eigen::MatrixXd& gram, Eigen::LLT<Eigen::MatrixXd>& llt) {
  llt.compute(gram);
  if (llt.info() == Eigen::Success) return 0.0;
  const Eigen::Index n = gram.rows();
  for (double jitter = 1e-8; jitter <= 1e-4 * 1.0001; jitter *= 10.0) {
    llt.compute(gram + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) return jitter;
  }
  throw NumericalError("Gram matrix not positive definite after jitter up to 1e-4");
}

}  // namespace

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "matern52" || name == "matern-5/2") return KernelFamily::Matern52;
  if (name == "se" || name == "squared_exponential" || name == "rbf")
    return KernelFamily::SquaredExponential;
  throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

std::string_view to_string(KernelFamily family) {
  return family == KernelFamily::Matern52 ? "matern52" : "squared_exponential";
}

// ---------------------------------------------------------------------------
// KernelConfig

KernelConfig KernelConfig::isotropic(KernelFamily family, int d, double lengthscale,
                                     double output_scale, double constant_mean) {
  return {family, Eigen::VectorXd::Constant(d, lengthscale), output_scale, constant_mean};
}

void KernelConfig::validate() const {
  if (lengthscales.size() == 0 || (lengthscales.array() <= 0.0).any())
    throw ConfigError("kernel lengthscales must be strictly positive");
  if (!(output_scale > 0.0)) throw ConfigError("kernel output_scale must be strictly positive");
}

double KernelConfig::operator()(const Eigen::Ref<const Eigen::VectorXd>& a,
                                const Eigen::Ref<const Eigen::VectorXd>& b) const {
  const double d2 = ((a - b).array() / lengthscales.array()).square().sum();
  if (family == KernelFamily::SquaredExponential) return output_scale * std::exp(-0.5 * d2);
  const double r = std::sqrt(d2);
  return output_scale * (1.0 + kSqrt5 * r + (5.0 / 3.0) * d2) * std::exp(-kSqrt5 * r);
}

Eigen::MatrixXd KernelConfig::matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
  const Eigen::RowVectorXd inv = lengthscales.cwiseInverse().transpose();
  const Eigen::MatrixXd As = A.array().rowwise() * inv.array();
  const Eigen::MatrixXd Bs = B.array().rowwise() * inv.array();
  return kernel_from_sq_dist(family, output_scale, scaled_sq_dist(As, Bs));
}

// ---------------------------------------------------------------------------
// Dataset / Standardization

Dataset::Dataset(Eigen::MatrixXd pts, Eigen::VectorXd vals)
    : points(std::move(pts)), values(std::move(vals)) {}

void Dataset::add(const Eigen::VectorXd& x, double y) {
  if (points.cols() != 0 && x.size() != points.cols())
    throw DataError("point dimension " + std::to_string(x.size()) + " does not match dataset " +
                    std::to_string(points.cols()));
  if (points.cols() == 0) points.resize(0, x.size());
  points.conservativeResize(points.rows() + 1, Eigen::NoChange);
  points.row(points.rows() - 1) = x.transpose();
  values.conservativeResize(values.size() + 1);
  values[values.size() - 1] = y;
}

void Dataset::validate() const {
  if (values.size() == 0) throw ConfigError("dataset is empty");
  if (points.rows() != values.size())
    throw DataError("dataset has " + std::to_string(points.rows()) + " points but " +
                    std::to_string(values.size()) + " values");
  if (points.cols() < 1) throw DataError("dataset dimension must be at least 1");
  if (!values.allFinite()) throw DataError("dataset contains non-finite values");
  if (!points.allFinite() || (points.array() < 0.0).any() || (points.array() > 1.0).any())
    throw DataError("dataset points must lie in the unit box");
}

Standardization Standardization::from_values(const Eigen::VectorXd& values) {
  Standardization s;
  if (values.size() == 0) return s;
  s.shift = values.mean();
  const double var = (values.array() - s.shift).square().mean();
  const double sd = std::sqrt(var);
  s.scale = sd > 1e-12 * std::max(1.0, std::abs(s.shift)) ? sd : 1.0;
  return s;
}

// ---------------------------------------------------------------------------
// GPModel

GPModel GPModel::with_hyperparameters(Dataset data, KernelConfig kernel, double noise,
                                      std::optional<Standardization> standardization) {
  data.validate();
  kernel.validate();
  if (kernel.lengthscales.size() != data.dim())
    throw DataError("kernel has " + std::to_string(kernel.lengthscales.size()) +
                    " lengthscales for dimension " + std::to_string(data.dim()));
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("noise must be nonnegative");
  if (standardization && !(standardization->scale > 0.0))
    throw ConfigError("standardization scale must be positive");

  GPModel gp;
  gp.standardization_ = standardization.value_or(Standardization::from_values(data.values));
  gp.kernel_ = std::move(kernel);
  gp.noise_ = noise;
  gp.data_ = std::move(data);

  const Eigen::Index n = gp.data_.size();
  Eigen::MatrixXd gram = gp.kernel_.matrix(gp.data_.points, gp.data_.points);
  gram.diagonal().array() += noise;
  gp.jitter_ = factorize_with_jitter(gram, gp.factor_);

  const Eigen::VectorXd resid =
      gp.standardization_.standardize(gp.data_.values).array() - gp.kernel_.constant_mean;
  gp.alpha_ = gp.factor_.solve(resid);
  const Eigen::MatrixXd& L = gp.factor_.matrixLLT();
  gp.log_marginal_likelihood_ = -0.5 * resid.dot(gp.alpha_) -
                                L.diagonal().array().log().sum() -
                                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  return gp;
}

void GPModel::check_dim(const Eigen::VectorXd& x) const {
  if (x.size() != dim())
    throw DataError("query dimension " + std::to_string(x.size()) + " does not match model " +
                    std::to_string(dim()));
}

Eigen::MatrixXd GPModel::whitened_cross(const Eigen::MatrixXd& points) const {
  Eigen::MatrixXd cross = kernel_.matrix(data_.points, points);
  factor_.matrixL().solveInPlace(cross);
  return cross;
}

double GPModel::prior_variance() const {
  return kernel_.output_scale * standardization_.scale * standardization_.scale;
}

Prediction GPModel::posterior(const Eigen::VectorXd& x) const {
  check_dim(x);
  const Eigen::MatrixXd xr = x.transpose();
  const Eigen::VectorXd k = kernel_.matrix(data_.points, xr).col(0);
  const double mean_z = kernel_.constant_mean + k.dot(alpha_);
  const Eigen::VectorXd v = factor_.matrixL().solve(k);
  double var_z = kernel_.output_scale - v.squaredNorm();
  if (var_z < 0.0) var_z = 0.0;
  const double s = standardization_.scale;
  return {standardization_.shift + s * mean_z, s * s * var_z};
}

double GPModel::posterior_cov(const Eigen::VectorXd& x, const Eigen::VectorXd& x2) const {
  check_dim(x);
  check_dim(x2);
  Eigen::MatrixXd pts(2, dim());
  pts.row(0) = x.transpose();
  pts.row(1) = x2.transpose();
  const Eigen::MatrixXd v = whitened_cross(pts);
  double cov_z = kernel_(x, x2) - v.col(0).dot(v.col(1));
  if (x == x2 && cov_z < 0.0) cov_z = 0.0;
  return standardization_.scale * standardization_.scale * cov_z;
}

double GPModel::mean(const Eigen::VectorXd& x) const {
  check_dim(x);
  const Eigen::MatrixXd xr = x.transpose();
  const double mean_z = kernel_.constant_mean + kernel_.matrix(data_.points, xr).col(0).dot(alpha_);
  return standardization_.shift + standardization_.scale * mean_z;
}

double GPModel::mean_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  check_dim(x);
  const Eigen::Index n = data_.points.rows();
  const Eigen::Index d = data_.points.cols();
  const double s = kernel_.output_scale;
  const bool se = kernel_.family == KernelFamily::SquaredExponential;
  grad.setZero(d);
  double mean_z = kernel_.constant_mean;
  for (Eigen::Index i = 0; i < n; ++i) {
    double d2 = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double t = (x[j] - data_.points(i, j)) / kernel_.lengthscales[j];
      d2 += t * t;
    }
    double k, coeff;  // dk/dx_j = -coeff * (x_j - X_ij) / l_j^2
    if (se) {
      k = s * std::exp(-0.5 * d2);
      coeff = k;
    } else {
      const double r = std::sqrt(d2);
      const double e = std::exp(-kSqrt5 * r);
      k = s * (1.0 + kSqrt5 * r + (5.0 / 3.0) * d2) * e;
      coeff = s * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * e;
    }
    mean_z += k * alpha_[i];
    const double w = coeff * alpha_[i];
    for (Eigen::Index j = 0; j < d; ++j) grad[j] -= w * (x[j] - data_.points(i, j));
  }
  grad.array() *= standardization_.scale / kernel_.lengthscales.array().square();
  return standardization_.shift + standardization_.scale * mean_z;
}

Eigen::VectorXd GPModel::means(const Eigen::MatrixXd& points) const {
  if (points.cols() != dim()) throw DataError("query dimension does not match model");
  Eigen::VectorXd mean_z =
      (kernel_.matrix(points, data_.points) * alpha_).array() + kernel_.constant_mean;
  return standardization_.destandardize(mean_z);
}

Eigen::MatrixXd GPModel::covariance(const Eigen::MatrixXd& points) const {
  if (points.cols() != dim()) throw DataError("query dimension does not match model");
  const Eigen::MatrixXd v = whitened_cross(points);
  Eigen::MatrixXd cov = kernel_.matrix(points, points);
  cov.noalias() -= v.transpose() * v;
  cov = 0.5 * (cov + cov.transpose());
  return standardization_.scale * standardization_.scale * cov;
}

// ---------------------------------------------------------------------------
// Marginal likelihood and fitting

MarginalLikelihood::MarginalLikelihood(Eigen::MatrixXd points, Eigen::VectorXd standardized_values,
                                       KernelFamily family)
    : points_(std::move(points)), values_(std::move(standardized_values)), family_(family) {}

Eigen::VectorXd MarginalLikelihood::pack(const KernelConfig& kernel, double noise) {
  const Eigen::Index d = kernel.lengthscales.size();
  Eigen::VectorXd theta(d + 3);
  theta.head(d) = kernel.lengthscales.array().log();
  theta[d] = std::log(kernel.output_scale);
  theta[d + 1] = std::log(noise);
  theta[d + 2] = kernel.constant_mean;
  return theta;
}

KernelConfig MarginalLikelihood::unpack_kernel(const Eigen::VectorXd& theta) const {
  const Eigen::Index d = points_.cols();
  return {family_, theta.head(d).array().exp(), std::exp(theta[d]), theta[d + 2]};
}

double MarginalLikelihood::unpack_noise(const Eigen::VectorXd& theta, int d) {
  return std::exp(theta[d + 1]);
}

double MarginalLikelihood::value(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
  const Eigen::Index n = points_.rows();
  const Eigen::Index d = points_.cols();
  const KernelConfig kernel = unpack_kernel(theta);
  const double noise = unpack_noise(theta, static_cast<int>(d));

  const Eigen::RowVectorXd inv = kernel.lengthscales.cwiseInverse().transpose();
  const Eigen::MatrixXd Xs = points_.array().rowwise() * inv.array();
  const Eigen::MatrixXd d2 = scaled_sq_dist(Xs, Xs);
  const Eigen::MatrixXd Kf = kernel_from_sq_dist(family_, kernel.output_scale, d2);
  Eigen::MatrixXd K = Kf;
  K.diagonal().array() += noise;

  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    if (grad) grad->setZero(theta.size());
    return -std::numeric_limits<double>::infinity();
  }
  const Eigen::VectorXd resid = values_.array() - kernel.constant_mean;
  const Eigen::VectorXd alpha = llt.solve(resid);
  const Eigen::MatrixXd& L = llt.matrixLLT();
  const double lml = -0.5 * resid.dot(alpha) - L.diagonal().array().log().sum() -
                     0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (!grad) return lml;

  grad->resize(theta.size());
  // K^{-1} = L^{-T} L^{-1}.
  Eigen::MatrixXd Linv = Eigen::MatrixXd::Identity(n, n);
  llt.matrixL().solveInPlace(Linv);
  Eigen::MatrixXd W(n, n);
  W.setZero();
  W.selfadjointView<Eigen::Lower>().rankUpdate(Linv.transpose(), -1.0);
  W.selfadjointView<Eigen::Lower>().rankUpdate(alpha, 1.0);
  W.triangularView<Eigen::StrictlyUpper>() = W.transpose();

  // d K / d log l_j = G .* D_j with D_j the scaled squared difference in dim j.
  Eigen::MatrixXd G;
  if (family_ == KernelFamily::SquaredExponential) {
    G = Kf;
  } else {
    const Eigen::ArrayXXd r = d2.array().sqrt();
    G = (kernel.output_scale * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * (-kSqrt5 * r).exp()).matrix();
  }
  // sum_ik WG_ik (x_ij - x_kj)^2 = 2 sum_i x_ij^2 r_i - 2 x_j^T WG x_j for
  // symmetric WG with row sums r.
  const Eigen::MatrixXd WG = W.cwiseProduct(G);
  const Eigen::VectorXd row_sums = WG.rowwise().sum();
  const Eigen::MatrixXd WGX = WG * Xs;
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::VectorXd xj = Xs.col(j);
    (*grad)[j] = xj.array().square().matrix().dot(row_sums) - xj.dot(WGX.col(j));
  }
  (*grad)[d] = 0.5 * W.cwiseProduct(Kf).sum();
  (*grad)[d + 1] = 0.5 * noise * W.trace();
  (*grad)[d + 2] = alpha.sum();
  return lml;
}

GPModel fit(const Dataset& data, KernelFamily family, std::uint64_t seed,
            const FitOptions& options) {
  data.validate();
  if (options.restarts < 1) throw ConfigError("fit restarts must be at least 1");
  const int d = data.dim();
  const HyperparameterBounds& hb = options.bounds;
  const Standardization standardization = Standardization::from_values(data.values);
  const MarginalLikelihood objective(data.points, standardization.standardize(data.values), family);

  Box box{Eigen::VectorXd(d + 3), Eigen::VectorXd(d + 3)};
  box.lower.head(d).setConstant(std::log(hb.lengthscale_min));
  box.upper.head(d).setConstant(std::log(hb.lengthscale_max));
  box.lower[d] = std::log(hb.output_scale_min);
  box.upper[d] = std::log(hb.output_scale_max);
  box.lower[d + 1] = std::log(hb.noise_min);
  box.upper[d + 1] = std::log(hb.noise_max);
  box.lower[d + 2] = hb.mean_min;
  box.upper[d + 2] = hb.mean_max;

  std::vector<Eigen::VectorXd> starts;
  if (options.warm_kernel && options.warm_kernel->lengthscales.size() == d) {
    starts.push_back(box.clamp(
        MarginalLikelihood::pack(*options.warm_kernel, options.warm_noise.value_or(1e-4))));
  } else {
    starts.push_back(box.clamp(
        MarginalLikelihood::pack(KernelConfig::isotropic(family, d, 0.3, 1.0, 0.0), 1e-4)));
  }
  RngStream rng(seed, 0x6170u);
  auto log_uniform = [&rng](double lo, double hi) {
    return std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo));
  };
  while (static_cast<int>(starts.size()) < options.restarts) {
    Eigen::VectorXd theta(d + 3);
    for (int j = 0; j < d; ++j) theta[j] = log_uniform(0.05, 2.0);
    theta[d] = log_uniform(0.2, 5.0);
    theta[d + 1] = log_uniform(1e-6, 1e-3);
    theta[d + 2] = -0.5 + rng.uniform();
    starts.push_back(box.clamp(theta));
  }

  const SmoothObjective negative = [&objective](const Eigen::VectorXd& theta,
                                                Eigen::VectorXd* grad) {
    const double v = objective.value(theta, grad);
    if (grad) *grad = -*grad;
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };
  QuasiNewtonOptions qn;
  qn.max_iterations = options.max_iterations;
  qn.gradient_tolerance = 1e-5;
  qn.value_tolerance = 1e-10;

  Eigen::VectorXd best_theta;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    const LocalResult r = minimize_box(negative, start, box, qn);
    if (r.value < best) {
      best = r.value;
      best_theta = r.x;
    }
  }
  if (!std::isfinite(best)) throw NumericalError("marginal likelihood could not be evaluated");

  return GPModel::with_hyperparameters(data, objective.unpack_kernel(best_theta),
                                       MarginalLikelihood::unpack_noise(best_theta, d),
                                       standardization);
}

FantasyCoefficients fantasy_coefficients(const GPModel& gp, const Eigen::MatrixXd& disc,
                                         const Eigen::VectorXd& candidate) {
  if (disc.cols() != gp.dim() || candidate.size() != gp.dim())
    throw DataError("fantasy_coefficients: dimension mismatch");
  const Eigen::MatrixXd cand = candidate.transpose();
  const Eigen::MatrixXd v_disc = gp.whitened_cross(disc);
  const Eigen::VectorXd v_cand = gp.whitened_cross(cand).col(0);
  const KernelConfig& k = gp.kernel();
  const Eigen::VectorXd cov_z = k.matrix(disc, cand).col(0) - v_disc.transpose() * v_cand;
  const double var_z = std::max(0.0, k.output_scale - v_cand.squaredNorm());
  const double denom = var_z + gp.noise();
  if (!(denom > 0.0))
    throw NumericalError("degenerate candidate: zero predictive variance and zero noise");
  return {gp.means(disc), gp.standardization().scale * cov_z / std::sqrt(denom)};
}

}  // namespace bilbao
