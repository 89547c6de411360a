#include "bilbao/sampling.hpp"

#include <map>

#include <Eigen/Cholesky>

#include "bilbao/errors.hpp"

namespace bilbao {

Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw DataError("covariance must be square");
  const Eigen::Index n = cov.rows();
  const double level = n > 0 ? cov.diagonal().cwiseAbs().mean() : 0.0;
  if (level == 0.0) return Eigen::MatrixXd::Zero(n, n);

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  for (double jitter = 1e-8; jitter <= 1e-4 * 1.0001; jitter *= 10.0) {
    llt.compute(cov + (jitter * level) * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw NumericalError("covariance not factorizable after jitter up to 1e-4");
}

Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           RngStream& stream) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw DataError("mvn_sample: covariance shape does not match mean");
  const Eigen::MatrixXd L = jittered_cholesky(cov);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = stream.normal();
  return mean + L.triangularView<Eigen::Lower>() * z;
}

JointPosteriorSampler::JointPosteriorSampler(const GPModel& gp, const Eigen::MatrixXd& candidates) {
  if (candidates.rows() == 0) throw DataError("thompson sampling needs at least one candidate");
  std::map<std::vector<double>, std::size_t> seen;
  std::vector<Eigen::Index> unique_rows;
  slot_.reserve(static_cast<std::size_t>(candidates.rows()));
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    std::vector<double> key(static_cast<std::size_t>(candidates.cols()));
    for (Eigen::Index j = 0; j < candidates.cols(); ++j) key[j] = candidates(i, j);
    auto [it, inserted] = seen.emplace(std::move(key), unique_rows.size());
    if (inserted) unique_rows.push_back(i);
    slot_.push_back(it->second);
  }
  Eigen::MatrixXd unique(static_cast<Eigen::Index>(unique_rows.size()), candidates.cols());
  for (std::size_t u = 0; u < unique_rows.size(); ++u)
    unique.row(static_cast<Eigen::Index>(u)) = candidates.row(unique_rows[u]);
  mean_ = gp.means(unique);
  factor_ = jittered_cholesky(gp.covariance(unique));
}

Eigen::VectorXd JointPosteriorSampler::draw(RngStream& stream) const {
  Eigen::VectorXd z(mean_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = stream.normal();
  const Eigen::VectorXd latent = mean_ + factor_.triangularView<Eigen::Lower>() * z;
  Eigen::VectorXd out(static_cast<Eigen::Index>(slot_.size()));
  for (std::size_t i = 0; i < slot_.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = latent[static_cast<Eigen::Index>(slot_[i])];
  return out;
}

ThompsonDraw JointPosteriorSampler::argmax(RngStream& stream) const {
  const Eigen::VectorXd sample = draw(stream);
  ThompsonDraw best{0, sample[0]};
  for (Eigen::Index i = 1; i < sample.size(); ++i) {
    if (sample[i] > best.value) best = {static_cast<std::size_t>(i), sample[i]};
  }
  return best;
}

ThompsonDraw thompson_argmax(const GPModel& gp, const Eigen::MatrixXd& candidates,
                             RngStream& stream) {
  return JointPosteriorSampler(gp, candidates).argmax(stream);
}

}  // namespace bilbao
