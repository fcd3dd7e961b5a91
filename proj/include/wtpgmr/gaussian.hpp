#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace wtpgmr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense multivariate Gaussian. `cov` is kept symmetric by every operation
/// in this header.
struct Gaussian {
  Vec mean;
  Mat cov;

  Gaussian() = default;
  Gaussian(Vec m, Mat c);

  Eigen::Index dim() const { return mean.size(); }

  /// Throws ValidationError if the dimension, symmetry (1e-9 relative) or
  /// PSD (eigenvalues >= -1e-9 trace) invariants are broken.
  void validate() const;
};

/// Canonical (information) form: precision = cov^-1, eta = precision * mean.
struct Information {
  Vec eta;
  Mat precision;
};

/// Relative regularisation used when the caller has no better scale.
inline constexpr double kDefaultRelativeEps = 1e-6;

/// eps = kDefaultRelativeEps * mean diagonal, floored at `abs_floor`.
double default_eps(const Mat& cov, double abs_floor = 1e-12);

/// cov + eps * I.
Mat regularize(const Mat& cov, double eps);

/// Affine push-forward: N(A m + b, A S A^T). Throws on dimension mismatch or
/// when A is numerically singular (condition number >= 1e12).
Gaussian transform(const Gaussian& g, const Mat& A, const Vec& b);

/// Normalised product of Gaussians in precision form.
Gaussian product(std::span<const Gaussian> gs);

/// Product where member j's covariance is divided by weights[j] before fusion.
/// Equivalent to product(scale_cov(g_j, w_j)) but never forms cov / w.
Gaussian weighted_product(std::span<const Gaussian> gs, std::span<const double> weights);

/// cov / gamma; gamma must be > 0.
Gaussian scale_cov(const Gaussian& g, double gamma);

/// Conditional of the `out_idx` block given the `in_idx` block equals `value`.
Gaussian condition(const Gaussian& g, std::span<const int> in_idx, std::span<const int> out_idx,
                   const Vec& value);

/// log det(cov) through Cholesky. Throws NumericalError when cov is not PD.
double log_det(const Mat& cov);

/// det(cov)^alpha evaluated as exp(alpha * logdet).
double det_power(const Mat& cov, double alpha);

/// Precision form of g (Cholesky; regularised once with default_eps on failure).
Information to_information(const Gaussian& g);
Gaussian from_information(const Information& info);

/// Log density of x under g.
double log_pdf(const Gaussian& g, const Vec& x);

/// (M + M^T) / 2
Mat symmetrized(const Mat& m);

}  // namespace wtpgmr
