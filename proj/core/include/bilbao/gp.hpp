#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace bilbao {

enum class KernelFamily { Matern52, SquaredExponential };

KernelFamily parse_kernel_family(std::string_view name);
std::string_view to_string(KernelFamily family);

/// Stationary ARD kernel with a constant prior mean. All quantities live in
/// standardized output units.
struct KernelConfig {
  KernelFamily family = KernelFamily::Matern52;
  Eigen::VectorXd lengthscales;
  double output_scale = 1.0;
  double constant_mean = 0.0;

  static KernelConfig isotropic(KernelFamily family, int d, double lengthscale,
                                double output_scale = 1.0, double constant_mean = 0.0);

  void validate() const;
  double operator()(const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b) const;
  /// Gram block k(A_i, B_j) for row-wise point sets.
  Eigen::MatrixXd matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const;
};

/// Observations D = (X, y). Points are rows of `points`.
struct Dataset {
  Eigen::MatrixXd points;
  Eigen::VectorXd values;

  Dataset() = default;
  Dataset(Eigen::MatrixXd points, Eigen::VectorXd values);
  explicit Dataset(int d) : points(0, d), values(0) {}

  int size() const { return static_cast<int>(values.size()); }
  int dim() const { return static_cast<int>(points.cols()); }
  bool empty() const { return values.size() == 0; }
  void add(const Eigen::VectorXd& x, double y);

  /// Throws DataError on shape mismatch, out-of-box coordinates or
  /// non-finite values; ConfigError when empty.
  void validate() const;
};

/// Affine map between raw values and the z-scored values the GP is fit on.
struct Standardization {
  double shift = 0.0;
  double scale = 1.0;

  static Standardization from_values(const Eigen::VectorXd& values);
  Eigen::VectorXd standardize(const Eigen::VectorXd& raw) const {
    return (raw.array() - shift) / scale;
  }
  Eigen::VectorXd destandardize(const Eigen::VectorXd& z) const {
    return z.array() * scale + shift;
  }
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

inline constexpr double kNoiseFloor = 1e-6;

/// Exact GP posterior with fixed hyperparameters over a dataset.
///
/// Immutable once built. Means and variances returned by the public methods
/// are in raw output units.
class GPModel {
 public:
  /// Conditions on `data` with the given hyperparameters. When
  /// `standardization` is absent it is computed from `data.values`.
  static GPModel with_hyperparameters(Dataset data, KernelConfig kernel, double noise,
                                      std::optional<Standardization> standardization = {});

  const KernelConfig& kernel() const { return kernel_; }
  double noise() const { return noise_; }
  /// Diagonal jitter added on top of the noise to obtain a factorization.
  double jitter() const { return jitter_; }
  const Dataset& dataset() const { return data_; }
  const Standardization& standardization() const { return standardization_; }
  int dim() const { return data_.dim(); }
  int size() const { return data_.size(); }

  Prediction posterior(const Eigen::VectorXd& x) const;
  double posterior_cov(const Eigen::VectorXd& x, const Eigen::VectorXd& x2) const;
  double mean(const Eigen::VectorXd& x) const;
  /// Posterior mean and its gradient with respect to every input coordinate.
  double mean_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;

  /// Posterior means at the rows of `points`.
  Eigen::VectorXd means(const Eigen::MatrixXd& points) const;
  /// Joint posterior covariance over the rows of `points`.
  Eigen::MatrixXd covariance(const Eigen::MatrixXd& points) const;

  /// L^{-1} k(X, points) where L L^T = K + noise I; the building block for
  /// posterior covariances against many candidates.
  Eigen::MatrixXd whitened_cross(const Eigen::MatrixXd& points) const;
  /// Prior variance k(x, x) in raw units.
  double prior_variance() const;
  /// Observation noise variance in raw units.
  double raw_noise() const { return noise_ * standardization_.scale * standardization_.scale; }

  double log_marginal_likelihood() const { return log_marginal_likelihood_; }

 private:
  GPModel() = default;
  void check_dim(const Eigen::VectorXd& x) const;

  KernelConfig kernel_;
  double noise_ = kNoiseFloor;
  double jitter_ = 0.0;
  Dataset data_;
  Standardization standardization_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
  Eigen::VectorXd alpha_;  // (K + noise I)^{-1} (z - m)
  double log_marginal_likelihood_ = 0.0;
};

/// Hyperparameter box used by the fitter.
struct HyperparameterBounds {
  double lengthscale_min = 1e-3;
  double lengthscale_max = 10.0;
  double output_scale_min = 1e-3;
  double output_scale_max = 1e3;
  double noise_min = kNoiseFloor;
  double noise_max = 1e-1;
  double mean_min = -5.0;
  double mean_max = 5.0;
};

/// Log marginal likelihood of standardized values as a function of the
/// packed parameter vector [log lengthscales..., log output_scale,
/// log noise, constant_mean].
class MarginalLikelihood {
 public:
  MarginalLikelihood(Eigen::MatrixXd points, Eigen::VectorXd standardized_values,
                     KernelFamily family);

  int parameter_count() const { return static_cast<int>(points_.cols()) + 3; }
  /// Returns -inf when the Gram matrix cannot be factorized.
  double value(const Eigen::VectorXd& theta, Eigen::VectorXd* grad = nullptr) const;

  static Eigen::VectorXd pack(const KernelConfig& kernel, double noise);
  KernelConfig unpack_kernel(const Eigen::VectorXd& theta) const;
  static double unpack_noise(const Eigen::VectorXd& theta, int d);

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd values_;
  KernelFamily family_;
};

struct FitOptions {
  int restarts = 8;
  int max_iterations = 60;
  HyperparameterBounds bounds;
  /// Used as the first start when present.
  std::optional<KernelConfig> warm_kernel;
  std::optional<double> warm_noise;
};

/// Maximum-likelihood fit: best of `options.restarts` projected-BFGS runs
/// in log-hyperparameter space. Deterministic in `seed`.
GPModel fit(const Dataset& data, KernelFamily family, std::uint64_t seed,
            const FitOptions& options = {});

/// One-step fantasy update coefficients for discrete KG.
struct FantasyCoefficients {
  Eigen::VectorXd mean;         // mu^n at each discretization point
  Eigen::VectorXd sigma_tilde;  // k^n(., x_cand) / sqrt(k^n(x_cand, x_cand) + noise)
};

/// Throws NumericalError when the candidate has zero predictive variance and
/// the model has zero noise.
FantasyCoefficients fantasy_coefficients(const GPModel& gp, const Eigen::MatrixXd& disc,
                                         const Eigen::VectorXd& candidate);

}  // namespace bilbao
