#include "wtpgmr/tpmodel.hpp"

#include "wtpgmr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace wtpgmr {

namespace {

constexpr double kMaxCondition = 1e12;

double log_sum_exp(const Eigen::Ref<const Vec>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// Row-wise log N(x_n | g) for a data matrix with one sample per row.
Vec log_pdf_rows(const Mat& X, const Gaussian& g) {
  Eigen::LLT<Mat> llt(g.cov);
  if (llt.info() != Eigen::Success) {
    llt.compute(regularize(g.cov, default_eps(g.cov)));
    if (llt.info() != Eigen::Success) throw NumericalError("fit_em: component covariance is not positive definite");
  }
  const Mat L = llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  const Mat centered = (X.rowwise() - g.mean.transpose()).transpose();
  const Mat z = llt.matrixL().solve(centered);
  const double d = static_cast<double>(g.dim());
  return (-0.5 * (z.colwise().squaredNorm().array() + logdet + d * std::log(2.0 * std::numbers::pi))).matrix().transpose();
}

Vec population_variance(const Mat& X) {
  const Vec mean = X.colwise().mean().transpose();
  return (X.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
}

Mat weighted_scatter(const Mat& X, const Vec& w, const Vec& mean, double mass) {
  const Mat centered = X.rowwise() - mean.transpose();
  return symmetrized(centered.transpose() * w.asDiagonal() * centered / mass);
}

}  // namespace

TaskFrame::TaskFrame(Mat a, Vec offset) : A(std::move(a)), b(std::move(offset)) {}

void TaskFrame::validate(bool has_time_channel) const {
  if (A.rows() != A.cols() || A.rows() != b.size()) {
    throw ValidationError("frame: A must be " + std::to_string(b.size()) + "x" + std::to_string(b.size()));
  }
  if (!A.allFinite() || !b.allFinite()) throw ValidationError("frame: non-finite entries");
  Eigen::JacobiSVD<Mat> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || !(s(s.size() - 1) > 0.0) || s(0) / s(s.size() - 1) >= kMaxCondition) {
    throw ValidationError("frame: A is singular");
  }
  if (has_time_channel) {
    const auto d = A.rows();
    const bool block = std::abs(A(0, 0) - 1.0) < 1e-12 && (d == 1 || (A.row(0).tail(d - 1).cwiseAbs().maxCoeff() == 0.0 &&
                                                                      A.col(0).tail(d - 1).cwiseAbs().maxCoeff() == 0.0));
    if (!block) throw ValidationError("frame: A must not mix the time channel with the state channels");
    if (b(0) != 0.0) throw ValidationError("frame: b must not offset the time channel");
  }
}

Vec TaskFrame::to_local(const Vec& x) const { return A.partialPivLu().solve(x - b); }

Vec TaskFrame::to_global(const Vec& x) const { return A * x + b; }

TaskFrame TaskFrame::identity(Eigen::Index dim) { return {Mat::Identity(dim, dim), Vec::Zero(dim)}; }

TaskFrame TaskFrame::planar(double x, double y, double angle) {
  Mat A = Mat::Identity(3, 3);
  A(1, 1) = std::cos(angle);
  A(1, 2) = -std::sin(angle);
  A(2, 1) = std::sin(angle);
  A(2, 2) = std::cos(angle);
  Vec b(3);
  b << 0.0, x, y;
  return {A, b};
}

bool Dataset::aligned() const {
  return std::all_of(demos.begin(), demos.end(),
                     [&](const Demonstration& d) { return d.length() == demos.front().length(); });
}

void Dataset::validate() const {
  if (demos.empty()) throw ValidationError("dataset: no demonstrations");
  const auto D = demos.front().points.cols();
  const auto P = demos.front().frames.size();
  if (D < 2) throw ValidationError("dataset: state needs a time channel and at least one output channel");
  if (P == 0) throw ValidationError("dataset: demonstrations need at least one frame");
  for (std::size_t m = 0; m < demos.size(); ++m) {
    const auto& demo = demos[m];
    const std::string where = "dataset: demos[" + std::to_string(m) + "]";
    if (demo.points.cols() != D) throw ValidationError(where + ": inconsistent state dimension");
    if (demo.frames.size() != P) throw ValidationError(where + ": inconsistent frame count");
    if (demo.points.rows() < 2) throw ValidationError(where + ": needs at least 2 points");
    if (!demo.points.allFinite()) throw ValidationError(where + ": non-finite points");
    for (Eigen::Index n = 1; n < demo.points.rows(); ++n) {
      if (!(demo.points(n, 0) > demo.points(n - 1, 0))) {
        throw ValidationError(where + ": time column must be strictly increasing");
      }
    }
    for (std::size_t j = 0; j < P; ++j) {
      if (demo.frames[j].dim() != D) {
        throw ValidationError(where + ".frames[" + std::to_string(j) + "]: dimension mismatch");
      }
      try {
        demo.frames[j].validate(true);
      } catch (const ValidationError& e) {
        throw ValidationError(where + ".frames[" + std::to_string(j) + "]: " + e.what());
      }
    }
  }
}

Dataset Dataset::without(int m) const {
  Dataset out{{}, meta};
  for (int i = 0; i < num_demos(); ++i) {
    if (i != m) out.demos.push_back(demos[i]);
  }
  return out;
}

void TPGMM::validate() const {
  if (priors.size() == 0) throw ValidationError("model: no components");
  if (static_cast<Eigen::Index>(components.size()) != priors.size()) {
    throw ValidationError("model: prior count does not match component count");
  }
  if ((priors.array() <= 0.0).any()) throw ValidationError("model: priors must be positive");
  if (std::abs(priors.sum() - 1.0) > 1e-12) throw ValidationError("model: priors must sum to 1");
  for (const auto& per_frame : components) {
    if (static_cast<int>(per_frame.size()) != P()) throw ValidationError("model: ragged frame list");
    for (const auto& g : per_frame) {
      if (g.dim() != D()) throw ValidationError("model: inconsistent component dimension");
      g.validate();
    }
  }
}

Mat project(const Demonstration& demo, int frame) {
  if (frame < 0 || frame >= static_cast<int>(demo.frames.size())) throw ValidationError("project: no such frame");
  const auto& f = demo.frames[frame];
  if (f.dim() != demo.points.cols()) throw ValidationError("project: frame dimension mismatch");
  Eigen::FullPivLU<Mat> lu(f.A);
  if (!lu.isInvertible()) throw ValidationError("project: frame matrix is singular");
  const Mat centered = (demo.points.rowwise() - f.b.transpose()).transpose();
  return lu.solve(centered).transpose();
}

Dataset resample(const Dataset& dataset, int T, TimeAxis axis) {
  if (T < 2) throw ValidationError("resample: T must be at least 2");
  Dataset out{{}, dataset.meta};
  out.demos.reserve(dataset.demos.size());
  for (const auto& demo : dataset.demos) {
    const auto n_src = demo.points.rows();
    if (n_src < 2) throw ValidationError("resample: each demonstration needs at least 2 points");
    const auto D = demo.points.cols();
    const double t0 = demo.points(0, 0);
    const double span = demo.points(n_src - 1, 0) - t0;
    if (!(span > 0.0)) throw ValidationError("resample: time column must be increasing");
    std::vector<double> s(n_src);
    for (Eigen::Index n = 0; n < n_src; ++n) s[n] = (demo.points(n, 0) - t0) / span;

    Demonstration res;
    res.frames = demo.frames;
    res.points.resize(T, D);
    for (int k = 0; k < T; ++k) {
      const double target = static_cast<double>(k) / (T - 1);
      auto it = std::upper_bound(s.begin(), s.end(), target);
      auto hi = static_cast<Eigen::Index>(std::clamp<std::ptrdiff_t>(it - s.begin(), 1, n_src - 1));
      const auto lo = hi - 1;
      const double w = std::clamp((target - s[lo]) / (s[hi] - s[lo]), 0.0, 1.0);
      res.points.row(k).tail(D - 1) = (1.0 - w) * demo.points.row(lo).tail(D - 1) + w * demo.points.row(hi).tail(D - 1);
      res.points(k, 0) = axis == TimeAxis::Steps ? static_cast<double>(k + 1) : target;
    }
    out.demos.push_back(std::move(res));
  }
  return out;
}

EmResult fit_em(const Dataset& dataset, int K, const EmConfig& cfg) {
  if (dataset.demos.empty()) throw ValidationError("fit_em: empty dataset");
  dataset.validate();
  Eigen::Index min_len = dataset.demos.front().length();
  Eigen::Index N = 0;
  for (const auto& d : dataset.demos) {
    min_len = std::min(min_len, d.length());
    N += d.length();
  }
  if (K < 1 || K > min_len) throw ValidationError("fit_em: K must lie in [1, T]");
  const int P = dataset.num_frames();
  const int D = dataset.dim();

  std::vector<Mat> X(P, Mat(N, D));
  for (int j = 0; j < P; ++j) {
    Eigen::Index row = 0;
    for (const auto& d : dataset.demos) {
      X[j].middleRows(row, d.length()) = project(d, j);
      row += d.length();
    }
  }

  // per-frame floor psi; M-step adds psi / mass
  std::vector<Vec> eps(P);
  for (int j = 0; j < P; ++j) {
    eps[j] = (cfg.rel_eps * population_variance(X[j]).array()).max(cfg.abs_eps).matrix();
  }
  const double n_total = static_cast<double>(N);

  // Equal time bins on the (frame independent) time channel.
  const Vec t = X[0].col(0);
  const double t_min = t.minCoeff();
  const double t_range = std::max(t.maxCoeff() - t_min, std::numeric_limits<double>::min());
  std::vector<int> bin(N);
  for (Eigen::Index n = 0; n < N; ++n) {
    bin[n] = std::min(K - 1, static_cast<int>(std::floor((t(n) - t_min) / t_range * K)));
  }
  auto init_component = [&](int i, TPGMM& model) {
    Vec w = Vec::Zero(N);
    for (Eigen::Index n = 0; n < N; ++n) w(n) = bin[n] == i ? 1.0 : 0.0;
    const double count = w.sum();
    if (count < 1.0) throw NumericalError("fit_em: time bin " + std::to_string(i) + " is empty");
    for (int j = 0; j < P; ++j) {
      const Vec mean = X[j].transpose() * w / count;
      Mat cov = weighted_scatter(X[j], w, mean, count);
      cov.diagonal() += eps[j];
      model.components[i][j] = Gaussian(mean, cov);
    }
    return count;
  };

  EmResult result;
  TPGMM& model = result.model;
  model.priors.resize(K);
  model.components.assign(K, std::vector<Gaussian>(P));
  for (int i = 0; i < K; ++i) model.priors(i) = init_component(i, model) / n_total;

  Mat log_r(N, K);
  int restarts = 0;
  for (int iter = 0;; ++iter) {
    double penalty = 0.0;
    for (int i = 0; i < K; ++i) {
      log_r.col(i).setConstant(std::log(model.priors(i)));
      for (int j = 0; j < P; ++j) {
        const auto& g = model.components[i][j];
        log_r.col(i) += log_pdf_rows(X[j], g);
        const Mat prec = g.cov.llt().solve(Mat::Identity(D, D));
        penalty -= 0.5 * n_total * eps[j].dot(prec.diagonal());
      }
    }
    Vec lse(N);
    for (Eigen::Index n = 0; n < N; ++n) lse(n) = log_sum_exp(log_r.row(n).transpose());
    const double objective = lse.sum() + penalty;
    if (!std::isfinite(objective)) throw NumericalError("fit_em: log-likelihood is not finite");
    result.log_likelihood.push_back(objective);
    result.iterations = iter;

    const auto& ll = result.log_likelihood;
    if (ll.size() >= 2 && (result.restarts.empty() || result.restarts.back() != static_cast<int>(ll.size()) - 2)) {
      const double prev = ll[ll.size() - 2];
      if (objective - prev < cfg.tol * std::abs(prev)) {
        result.converged = true;
        break;
      }
    }
    if (iter >= cfg.max_iters) break;

    const Mat resp = (log_r.colwise() - lse).array().exp().matrix();
    const Vec mass = resp.colwise().sum().transpose();
    bool reset = false;
    for (int i = 0; i < K; ++i) {
      if (mass(i) < cfg.min_mass) {
        if (++restarts > cfg.max_restarts) {
          throw NumericalError("fit_em: component " + std::to_string(i) + " collapsed after " +
                               std::to_string(cfg.max_restarts) + " restarts");
        }
        model.priors(i) = init_component(i, model) / n_total;
        reset = true;
        continue;
      }
      model.priors(i) = mass(i) / n_total;
      for (int j = 0; j < P; ++j) {
        const Vec w = resp.col(i);
        const Vec mean = X[j].transpose() * w / mass(i);
        Mat cov = weighted_scatter(X[j], w, mean, mass(i));
        cov.diagonal() += eps[j] * (n_total / mass(i));
        model.components[i][j] = Gaussian(mean, cov);
      }
    }
    model.priors /= model.priors.sum();
    if (reset) result.restarts.push_back(static_cast<int>(result.log_likelihood.size()) - 1);
  }
  return result;
}

std::vector<Gaussian> global_components(const TPGMM& model, std::span<const TaskFrame> frames) {
  if (static_cast<int>(frames.size()) != model.P()) throw ValidationError("global_components: frame count mismatch");
  std::vector<Gaussian> out;
  out.reserve(model.K());
  std::vector<Gaussian> placed(frames.size());
  for (int i = 0; i < model.K(); ++i) {
    for (std::size_t j = 0; j < frames.size(); ++j) {
      placed[j] = transform(model.components[i][j], frames[j].A, frames[j].b);
    }
    out.push_back(product(placed));
  }
  return out;
}

GmrResult gmr(std::span<const Gaussian> components, const Vec& priors, double t) {
  const auto K = static_cast<Eigen::Index>(components.size());
  if (K == 0 || priors.size() != K) throw ValidationError("gmr: component/prior count mismatch");
  const int D = static_cast<int>(components.front().dim());
  if (D < 2) throw ValidationError("gmr: components need a time channel and an output channel");

  std::vector<int> out_idx(D - 1);
  std::iota(out_idx.begin(), out_idx.end(), 1);
  const int in_idx[] = {0};
  Vec value(1);
  value << t;

  GmrResult res;
  Vec log_w(K);
  for (Eigen::Index i = 0; i < K; ++i) {
    const auto& g = components[i];
    if (g.dim() != D) throw ValidationError("gmr: inconsistent component dimension");
    const double var = g.cov(0, 0);
    if (!(var > 0.0)) throw NumericalError("gmr: time variance must be positive");
    const double z = t - g.mean(0);
    log_w(i) = std::log(priors(i)) - 0.5 * (z * z / var + std::log(2.0 * std::numbers::pi * var));
  }
  const double top = log_w.maxCoeff();
  if (!std::isfinite(top) || top < std::log(std::numeric_limits<double>::min())) {
    res.responsibilities = Vec::Constant(K, 1.0 / static_cast<double>(K));
    res.fallback = true;
  } else {
    res.responsibilities = (log_w.array() - log_sum_exp(log_w)).exp().matrix();
  }

  Vec mean = Vec::Zero(D - 1);
  Mat second = Mat::Zero(D - 1, D - 1);
  for (Eigen::Index i = 0; i < K; ++i) {
    const Gaussian c = condition(components[i], in_idx, out_idx, value);
    const double h = res.responsibilities(i);
    mean += h * c.mean;
    second += h * (c.cov + c.mean * c.mean.transpose());
  }
  res.output = Gaussian(mean, symmetrized(second - mean * mean.transpose()));
  return res;
}

namespace {

void append_step(Trajectory& traj, Eigen::Index n, const GmrResult& r) {
  traj.means.row(n) = r.output.mean.transpose();
  traj.covs[n] = r.output.cov;
  if (r.fallback) ++traj.fallback_steps;
}

Trajectory empty_trajectory(std::span<const double> times, int out_dim) {
  Trajectory traj;
  const auto T = static_cast<Eigen::Index>(times.size());
  traj.times = Eigen::Map<const Vec>(times.data(), T);
  traj.means.resize(T, out_dim);
  traj.covs.resize(T);
  return traj;
}

}  // namespace

Trajectory reproduce(const TPGMM& model, std::span<const TaskFrame> frames, std::span<const double> times) {
  const auto comps = global_components(model, frames);
  Trajectory traj = empty_trajectory(times, model.D() - 1);
  for (std::size_t n = 0; n < times.size(); ++n) {
    append_step(traj, static_cast<Eigen::Index>(n), gmr(comps, model.priors, times[n]));
  }
  return traj;
}

Trajectory reproduce(const TPGMM& model, const std::vector<std::vector<TaskFrame>>& frames_per_step,
                     std::span<const double> times) {
  if (frames_per_step.size() != times.size()) throw ValidationError("reproduce: one frame set per time step required");
  Trajectory traj = empty_trajectory(times, model.D() - 1);
  for (std::size_t n = 0; n < times.size(); ++n) {
    const auto comps = global_components(model, frames_per_step[n]);
    append_step(traj, static_cast<Eigen::Index>(n), gmr(comps, model.priors, times[n]));
  }
  return traj;
}

std::vector<double> step_times(int T) {
  std::vector<double> out(std::max(T, 0));
  std::iota(out.begin(), out.end(), 1.0);
  return out;
}

double trajectory_rmse(const Demonstration& demo, const Trajectory& traj) {
  if (demo.length() != traj.length() || traj.means.rows() != demo.length() || demo.points.cols() - 1 != traj.means.cols()) {
    throw ValidationError("rmse: trajectory and demonstration are not aligned");
  }
  const Mat diff = demo.points.rightCols(traj.means.cols()) - traj.means;
  return std::sqrt(diff.rowwise().squaredNorm().mean());
}

}  // namespace wtpgmr
