#include "wtpgmr/gaussian.hpp"

#include "wtpgmr/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace wtpgmr {

namespace {

constexpr double kMaxCondition = 1e12;

std::string dims_msg(const char* what, Eigen::Index a, Eigen::Index b) {
  return std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
         std::to_string(b) + ")";
}

// Cholesky of a covariance, with a single default_eps retry for matrices that
// are PSD but numerically rank deficient.
Eigen::LLT<Mat> robust_llt(const Mat& cov, const char* what) {
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() == Eigen::Success) return llt;
  llt.compute(regularize(cov, default_eps(cov)));
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": covariance is not positive definite");
  }
  return llt;
}

}  // namespace

Gaussian::Gaussian(Vec m, Mat c) : mean(std::move(m)), cov(std::move(c)) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ValidationError(dims_msg("Gaussian", mean.size(), cov.rows()));
  }
}

void Gaussian::validate() const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ValidationError(dims_msg("Gaussian", mean.size(), cov.rows()));
  }
  if (!mean.allFinite() || !cov.allFinite()) throw ValidationError("Gaussian: non-finite entries");
  const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1e-300);
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ValidationError("Gaussian: covariance is not symmetric");
  }
  if (mean.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrized(cov), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-9 * std::abs(cov.trace())) {
    throw ValidationError("Gaussian: covariance is not positive semi-definite");
  }
}

Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

double default_eps(const Mat& cov, double abs_floor) {
  if (cov.rows() == 0) return abs_floor;
  const double mean_diag = cov.diagonal().mean();
  return std::max(kDefaultRelativeEps * mean_diag, abs_floor);
}

Mat regularize(const Mat& cov, double eps) {
  if (!(eps > 0.0)) throw ValidationError("regularize: eps must be positive");
  if (cov.rows() != cov.cols()) throw ValidationError("regularize: matrix is not square");
  Mat out = cov;
  out.diagonal().array() += eps;
  return out;
}

Gaussian transform(const Gaussian& g, const Mat& A, const Vec& b) {
  if (A.rows() != g.dim() || A.cols() != g.dim()) throw ValidationError(dims_msg("transform", A.rows(), g.dim()));
  if (b.size() != g.dim()) throw ValidationError(dims_msg("transform", b.size(), g.dim()));
  Eigen::JacobiSVD<Mat> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() > 0 && !(s(s.size() - 1) > 0.0 && s(0) / s(s.size() - 1) < kMaxCondition)) {
    throw ValidationError("transform: frame matrix is singular");
  }
  return {A * g.mean + b, symmetrized(A * g.cov * A.transpose())};
}

Information to_information(const Gaussian& g) {
  const auto llt = robust_llt(g.cov, "to_information");
  Information info;
  info.precision = symmetrized(llt.solve(Mat::Identity(g.dim(), g.dim())));
  info.eta = info.precision * g.mean;
  return info;
}

Gaussian from_information(const Information& info) {
  const auto llt = robust_llt(info.precision, "from_information");
  Mat cov = symmetrized(llt.solve(Mat::Identity(info.eta.size(), info.eta.size())));
  Vec mean = llt.solve(info.eta);
  return {std::move(mean), std::move(cov)};
}

Gaussian weighted_product(std::span<const Gaussian> gs, std::span<const double> weights) {
  if (gs.empty()) throw ValidationError("product: empty list");
  if (weights.size() != gs.size()) throw ValidationError(dims_msg("product weights", weights.size(), gs.size()));
  const auto d = gs.front().dim();
  Information acc{Vec::Zero(d), Mat::Zero(d, d)};
  for (std::size_t j = 0; j < gs.size(); ++j) {
    if (gs[j].dim() != d) throw ValidationError(dims_msg("product", gs[j].dim(), d));
    if (!(weights[j] > 0.0)) throw ValidationError("product: weights must be positive");
    const auto info = to_information(gs[j]);
    acc.precision += weights[j] * info.precision;
    acc.eta += weights[j] * info.eta;
  }
  return from_information(acc);
}

Gaussian product(std::span<const Gaussian> gs) {
  if (gs.size() == 1) return gs.front();
  const std::vector<double> ones(gs.size(), 1.0);
  return weighted_product(gs, ones);
}

Gaussian scale_cov(const Gaussian& g, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("scale_cov: gamma must be positive");
  return {g.mean, g.cov / gamma};
}

Gaussian condition(const Gaussian& g, std::span<const int> in_idx, std::span<const int> out_idx,
                   const Vec& value) {
  const auto d = static_cast<int>(g.dim());
  if (value.size() != static_cast<Eigen::Index>(in_idx.size())) {
    throw ValidationError(dims_msg("condition", value.size(), in_idx.size()));
  }
  std::vector<char> used(d, 0);
  for (auto idxs : {in_idx, out_idx}) {
    for (int i : idxs) {
      if (i < 0 || i >= d) throw ValidationError("condition: index out of range");
      if (used[i]) throw ValidationError("condition: index sets overlap");
      used[i] = 1;
    }
  }
  const auto ni = static_cast<Eigen::Index>(in_idx.size());
  const auto no = static_cast<Eigen::Index>(out_idx.size());
  Mat s_ii(ni, ni), s_oi(no, ni), s_oo(no, no);
  Vec m_i(ni), m_o(no);
  for (Eigen::Index a = 0; a < ni; ++a) {
    m_i(a) = g.mean(in_idx[a]);
    for (Eigen::Index c = 0; c < ni; ++c) s_ii(a, c) = g.cov(in_idx[a], in_idx[c]);
  }
  for (Eigen::Index a = 0; a < no; ++a) {
    m_o(a) = g.mean(out_idx[a]);
    for (Eigen::Index c = 0; c < ni; ++c) s_oi(a, c) = g.cov(out_idx[a], in_idx[c]);
    for (Eigen::Index c = 0; c < no; ++c) s_oo(a, c) = g.cov(out_idx[a], out_idx[c]);
  }
  Eigen::LLT<Mat> llt(s_ii);
  if (llt.info() != Eigen::Success) throw NumericalError("condition: input block is singular");
  const Mat gain = llt.solve(s_oi.transpose()).transpose();
  return {m_o + gain * (value - m_i), symmetrized(s_oo - gain * s_oi.transpose())};
}

double log_det(const Mat& cov) {
  if (cov.rows() != cov.cols()) throw ValidationError("log_det: matrix is not square");
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("log_det: matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double det_power(const Mat& cov, double alpha) { return std::exp(alpha * log_det(cov)); }

double log_pdf(const Gaussian& g, const Vec& x) {
  if (x.size() != g.dim()) throw ValidationError(dims_msg("log_pdf", x.size(), g.dim()));
  const auto llt = robust_llt(g.cov, "log_pdf");
  const Vec z = llt.matrixL().solve(x - g.mean);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (z.squaredNorm() + logdet + static_cast<double>(g.dim()) * std::log(2.0 * std::numbers::pi));
}

}  // namespace wtpgmr
