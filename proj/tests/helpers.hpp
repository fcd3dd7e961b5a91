#pragma once

#include "wtpgmr/gaussian.hpp"
#include "wtpgmr/tpmodel.hpp"

#include <cmath>
#include <random>

namespace testing {

using wtpgmr::Mat;
using wtpgmr::Vec;

inline Mat random_spd(std::mt19937_64& rng, int d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat B(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B(i, j) = n(rng);
  return scale * (B * B.transpose() / d + 0.2 * Mat::Identity(d, d));
}

inline Vec random_vec(std::mt19937_64& rng, int d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = n(rng);
  return v;
}

/// N x d matrix of draws from N(mean, cov).
inline Mat sample(std::mt19937_64& rng, const Vec& mean, const Mat& cov, int N) {
  const Mat L = Eigen::LLT<Mat>(cov).matrixL();
  std::normal_distribution<double> n(0.0, 1.0);
  Mat X(N, mean.size());
  Vec z(mean.size());
  for (int k = 0; k < N; ++k) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = n(rng);
    X.row(k) = (mean + L * z).transpose();
  }
  return X;
}

inline Vec sample_mean(const Mat& X) { return X.colwise().mean().transpose(); }

inline Mat sample_cov(const Mat& X) {
  const Mat c = X.rowwise() - X.colwise().mean();
  return c.transpose() * c / static_cast<double>(X.rows() - 1);
}

/// Mean and covariance of samples agree with (mean, cov) within 3 standard errors.
inline bool within_3se(const Mat& X, const Vec& mean, const Mat& cov) {
  const double N = static_cast<double>(X.rows());
  const Vec m = sample_mean(X);
  const Mat S = sample_cov(X);
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    if (std::abs(m(i) - mean(i)) > 3.0 * std::sqrt(cov(i, i) / N)) return false;
    for (Eigen::Index j = 0; j < mean.size(); ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / N);
      if (std::abs(S(i, j) - cov(i, j)) > 3.0 * se) return false;
    }
  }
  return true;
}

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

/// Two-frame planar dataset with a time column 1..T.
inline wtpgmr::Dataset planar_dataset(std::mt19937_64& rng, int M, int T, double spread) {
  std::normal_distribution<double> n(0.0, 1.0);
  wtpgmr::Dataset ds;
  for (int m = 0; m < M; ++m) {
    const double sx = 1.0 + spread * n(rng);
    const double sy = 1.0 + spread * n(rng);
    const double angle = 0.3 * n(rng);
    wtpgmr::Demonstration d;
    d.points.resize(T, 3);
    for (int k = 0; k < T; ++k) {
      const double s = static_cast<double>(k) / (T - 1);
      d.points(k, 0) = k + 1;
      d.points(k, 1) = (1 - s) * sx + 0.2 * std::sin(3.0 * s) + 0.01 * n(rng);
      d.points(k, 2) = (1 - s) * sy + 0.1 * s * s + 0.01 * n(rng);
    }
    d.frames = {wtpgmr::TaskFrame::planar(sx, sy, angle), wtpgmr::TaskFrame::planar(0.0, 0.0, 0.0)};
    ds.demos.push_back(std::move(d));
  }
  return ds;
}

}  // namespace testing
