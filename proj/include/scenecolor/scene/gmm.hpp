#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <json.hpp>

#include "scenecolor/core/error.hpp"
#include "scenecolor/core/random.hpp"

namespace scenecolor::scene {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class CovarianceType { Full, Diagonal };

/// Gaussian mixture with cached Cholesky factors.
class Gmm {
 public:
  Gmm() = default;
  Gmm(CovarianceType type, std::vector<double> weights, std::vector<VectorXd> means, std::vector<MatrixXd> covariances)
      : type_(type), weights_(std::move(weights)), means_(std::move(means)), covs_(std::move(covariances)) {
    prepare();
  }

  CovarianceType type() const { return type_; }
  std::size_t kernels() const { return weights_.size(); }
  std::size_t dimension() const { return means_.empty() ? 0 : static_cast<std::size_t>(means_[0].size()); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<VectorXd>& means() const { return means_; }
  const std::vector<MatrixXd>& covariances() const { return covs_; }

  /// Log density of each kernel including its log weight.
  void kernel_log_terms(const VectorXd& x, std::vector<double>& out) const {
    out.resize(weights_.size());
    const double d = static_cast<double>(dimension());
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      const VectorXd diff = x - means_[k];
      double maha;
      if (type_ == CovarianceType::Diagonal) {
        maha = (diff.array().square() / covs_[k].diagonal().array()).sum();
      } else {
        maha = chol_[k].matrixL().solve(diff).squaredNorm();
      }
      out[k] = log_weight_[k] - 0.5 * (d * kLog2Pi + log_det_[k] + maha);
    }
  }

  double log_density(const VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != dimension())
      fail(ErrorCode::DimensionMismatch, "GMM input has wrong dimension");
    std::vector<double> t;
    kernel_log_terms(x, t);
    const double mx = *std::max_element(t.begin(), t.end());
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double v : t) s += std::exp(v - mx);
    return mx + std::log(s);
  }

 private:
  static constexpr double kLog2Pi = 1.8378770664093454836;

  void prepare() {
    if (weights_.empty() || means_.size() != weights_.size() || covs_.size() != weights_.size())
      fail(ErrorCode::InvalidArgument, "GMM needs matching weights, means and covariances");
    log_weight_.clear();
    log_det_.clear();
    chol_.clear();
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      log_weight_.push_back(std::log(weights_[k]));
      if (type_ == CovarianceType::Diagonal) {
        if ((covs_[k].diagonal().array() <= 0.0).any()) fail(ErrorCode::InvalidArgument, "variance must be positive");
        log_det_.push_back(covs_[k].diagonal().array().log().sum());
        chol_.emplace_back();
      } else {
        Eigen::LLT<MatrixXd> llt(covs_[k]);
        if (llt.info() != Eigen::Success) fail(ErrorCode::InvalidArgument, "covariance is not positive definite");
        log_det_.push_back(2.0 * llt.matrixLLT().diagonal().array().log().sum());
        chol_.push_back(std::move(llt));
      }
    }
  }

  CovarianceType type_ = CovarianceType::Full;
  std::vector<double> weights_;
  std::vector<VectorXd> means_;
  std::vector<MatrixXd> covs_;
  std::vector<double> log_weight_, log_det_;
  std::vector<Eigen::LLT<MatrixXd>> chol_;
};

struct GmmOptions {
  std::size_t kernels = 16;
  CovarianceType covariance = CovarianceType::Full;
  double ridge = 1.0;  // added to every covariance diagonal
  std::size_t max_iterations = 200;
  double tolerance = 1e-6;  // on mean log-likelihood
  std::uint64_t seed = 0x6d6d;
  bool select_by_bic = false;  // treat `kernels` as an upper bound
};

struct GmmFit {
  Gmm model;
  std::size_t iterations = 0;
  double mean_log_likelihood = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

// Seeded k-means++ followed by Lloyd iterations. Returns cluster labels.
inline std::vector<std::size_t> kmeans_labels(const std::vector<VectorXd>& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.size();
  std::vector<VectorXd> centers = {x[rng.index(n)]};
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (x[i] - centers[0]).squaredNorm();
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (total <= 0.0) break;
    double u = rng.uniform() * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (u < d2[i]) {
        pick = i;
        break;
      }
      u -= d2[i];
    }
    centers.push_back(x[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], (x[i] - centers.back()).squaredNorm());
  }
  std::vector<std::size_t> label(n, 0);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = (x[i] - centers[c]).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      changed |= best != label[i];
      label[i] = best;
    }
    std::vector<VectorXd> sum(centers.size(), VectorXd::Zero(x[0].size()));
    std::vector<double> cnt(centers.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[label[i]] += x[i];
      cnt[label[i]] += 1.0;
    }
    for (std::size_t c = 0; c < centers.size(); ++c)
      if (cnt[c] > 0.0) centers[c] = sum[c] / cnt[c];
    if (!changed && iter > 0) break;
  }
  return label;
}

}  // namespace detail

/// EM with k-means initialization. Fewer samples than kernels clamps the
/// kernel count and records a warning.
inline GmmFit fit_gmm_fixed(const std::vector<VectorXd>& x, const GmmOptions& opt) {
  if (x.empty()) fail(ErrorCode::InsufficientData, "cannot fit a mixture to zero samples");
  if (opt.kernels < 1) fail(ErrorCode::InvalidArgument, "kernel count must be positive");
  const std::size_t n = x.size();
  const auto dim = x[0].size();
  GmmFit fit;
  std::size_t k = opt.kernels;
  if (n < k) {
    fit.warnings.push_back("InsufficientData: " + std::to_string(n) + " samples for " + std::to_string(k) +
                           " kernels; kernel count clamped");
    k = n;
  }
  Rng rng(opt.seed);
  const auto init = detail::kmeans_labels(x, k, rng);
  k = *std::max_element(init.begin(), init.end()) + 1;

  // Responsibilities start as hard k-means assignments.
  MatrixXd resp = MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < n; ++i) resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(init[i])) = 1.0;

  auto m_step = [&](const MatrixXd& r) {
    std::vector<double> w;
    std::vector<VectorXd> mu;
    std::vector<MatrixXd> cov;
    for (Eigen::Index c = 0; c < r.cols(); ++c) {
      const double nk = r.col(c).sum();
      if (nk < 1e-10) continue;  // dead kernel
      VectorXd m = VectorXd::Zero(dim);
      for (std::size_t i = 0; i < n; ++i) m += r(static_cast<Eigen::Index>(i), c) * x[i];
      m /= nk;
      MatrixXd s = MatrixXd::Zero(dim, dim);
      for (std::size_t i = 0; i < n; ++i) {
        const VectorXd d = x[i] - m;
        if (opt.covariance == CovarianceType::Diagonal)
          s.diagonal() += r(static_cast<Eigen::Index>(i), c) * d.array().square().matrix();
        else
          s += r(static_cast<Eigen::Index>(i), c) * d * d.transpose();
      }
      s /= nk;
      s.diagonal().array() += opt.ridge;
      w.push_back(nk / static_cast<double>(n));
      mu.push_back(std::move(m));
      cov.push_back(std::move(s));
    }
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    return Gmm(opt.covariance, std::move(w), std::move(mu), std::move(cov));
  };

  fit.model = m_step(resp);
  double previous = -std::numeric_limits<double>::infinity();
  std::vector<double> t;
  for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
    resp.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(fit.model.kernels()));
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      fit.model.kernel_log_terms(x[i], t);
      const double mx = *std::max_element(t.begin(), t.end());
      double s = 0.0;
      for (double v : t) s += std::exp(v - mx);
      const double lse = mx + std::log(s);
      ll += lse;
      for (std::size_t c = 0; c < t.size(); ++c)
        resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = std::exp(t[c] - lse);
    }
    ll /= static_cast<double>(n);
    fit.iterations = iter + 1;
    fit.mean_log_likelihood = ll;
    if (std::abs(ll - previous) <= opt.tolerance * std::max(1.0, std::abs(ll))) break;
    previous = ll;
    fit.model = m_step(resp);
  }
  return fit;
}

inline std::size_t parameter_count(const Gmm& g) {
  const std::size_t d = g.dimension(), k = g.kernels();
  const std::size_t cov = g.type() == CovarianceType::Diagonal ? d : d * (d + 1) / 2;
  return (k - 1) + k * (d + cov);
}

/// As fit_gmm_fixed; with `select_by_bic` every count from 1 to `kernels` is
/// fitted and the lowest BIC wins (ties to fewer kernels).
inline GmmFit fit_gmm(const std::vector<VectorXd>& x, const GmmOptions& opt) {
  if (!opt.select_by_bic) return fit_gmm_fixed(x, opt);
  if (x.empty()) fail(ErrorCode::InsufficientData, "cannot fit a mixture to zero samples");
  const double n = static_cast<double>(x.size());
  GmmFit best;
  double best_bic = std::numeric_limits<double>::infinity();
  std::vector<std::string> warnings;
  for (std::size_t k = 1; k <= opt.kernels; ++k) {
    GmmOptions o = opt;
    o.kernels = k;
    auto fit = fit_gmm_fixed(x, o);
    if (!fit.warnings.empty()) {
      warnings = fit.warnings;
      break;  // clamped: larger counts repeat this fit
    }
    const double bic = -2.0 * n * fit.mean_log_likelihood + static_cast<double>(parameter_count(fit.model)) * std::log(n);
    if (bic < best_bic) {
      best_bic = bic;
      best = std::move(fit);
    }
  }
  best.warnings = warnings;
  return best;
}

inline nlohmann::json to_json(const Gmm& g) {
  nlohmann::json kernels = nlohmann::json::array();
  for (std::size_t k = 0; k < g.kernels(); ++k) {
    const auto& c = g.covariances()[k];
    std::vector<double> mean(g.means()[k].data(), g.means()[k].data() + g.means()[k].size());
    nlohmann::json cov;
    if (g.type() == CovarianceType::Diagonal) {
      std::vector<double> diag;
      for (Eigen::Index i = 0; i < c.rows(); ++i) diag.push_back(c(i, i));
      cov = diag;
    } else {
      cov = nlohmann::json::array();
      for (Eigen::Index r = 0; r < c.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(c.cols()));
        for (Eigen::Index q = 0; q < c.cols(); ++q) row[static_cast<std::size_t>(q)] = c(r, q);
        cov.push_back(row);
      }
    }
    kernels.push_back({{"weight", g.weights()[k]}, {"mean", mean}, {"covariance", cov}});
  }
  return {{"covariance_type", g.type() == CovarianceType::Diagonal ? "diagonal" : "full"}, {"kernels", kernels}};
}

inline Gmm gmm_from_json(const nlohmann::json& j) {
  const auto type = j.at("covariance_type").get<std::string>() == "diagonal" ? CovarianceType::Diagonal
                                                                              : CovarianceType::Full;
  std::vector<double> w;
  std::vector<VectorXd> mu;
  std::vector<MatrixXd> cov;
  for (const auto& k : j.at("kernels")) {
    w.push_back(k.at("weight").get<double>());
    const auto m = k.at("mean").get<std::vector<double>>();
    mu.push_back(Eigen::Map<const VectorXd>(m.data(), static_cast<Eigen::Index>(m.size())));
    const auto d = static_cast<Eigen::Index>(m.size());
    MatrixXd c = MatrixXd::Zero(d, d);
    if (type == CovarianceType::Diagonal) {
      const auto v = k.at("covariance").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(v.size()) != d) fail(ErrorCode::ParseError, "covariance size mismatch");
      for (Eigen::Index i = 0; i < d; ++i) c(i, i) = v[static_cast<std::size_t>(i)];
    } else {
      const auto rows = k.at("covariance").get<std::vector<std::vector<double>>>();
      if (static_cast<Eigen::Index>(rows.size()) != d) fail(ErrorCode::ParseError, "covariance size mismatch");
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index q = 0; q < d; ++q) c(r, q) = rows[static_cast<std::size_t>(r)].at(static_cast<std::size_t>(q));
    }
    cov.push_back(std::move(c));
  }
  return Gmm(type, std::move(w), std::move(mu), std::move(cov));
}

}  // namespace scenecolor::scene
