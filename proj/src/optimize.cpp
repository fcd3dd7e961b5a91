#include "wtpgmr/optimize.hpp"

#include "wtpgmr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wtpgmr {

std::string to_string(WeightMode mode) { return mode == WeightMode::Literal ? "literal" : "inverse"; }

WeightMode weight_mode_from_string(const std::string& s) {
  if (s == "literal") return WeightMode::Literal;
  if (s == "inverse") return WeightMode::Inverse;
  throw ValidationError("unknown loss mode '" + s + "' (expected literal|inverse)");
}

double weighted_loss(const Dataset& dataset, std::span<const Trajectory> generated, const LossConfig& cfg) {
  if (static_cast<int>(generated.size()) != dataset.num_demos()) {
    throw ValidationError("weighted_loss: one generated trajectory per demonstration required");
  }
  double loss = 0.0;
  for (std::size_t m = 0; m < generated.size(); ++m) {
    const auto& demo = dataset.demos[m];
    const auto& traj = generated[m];
    const auto T = demo.length();
    if (traj.length() != T || static_cast<Eigen::Index>(traj.covs.size()) != T ||
        traj.means.cols() != demo.points.cols() - 1) {
      throw ValidationError("weighted_loss: trajectory " + std::to_string(m) + " is misaligned with its demonstration");
    }
    Vec sigma(T);
    for (Eigen::Index n = 0; n < T; ++n) {
      const double norm = traj.covs[n].norm();
      sigma(n) = cfg.weight_mode == WeightMode::Literal ? norm : 1.0 / std::max(norm, std::numeric_limits<double>::min());
    }
    const double total = sigma.sum();
    if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("weighted_loss: degenerate covariance norms");
    sigma /= total;
    const Mat diff = demo.points.rightCols(traj.means.cols()) - traj.means;
    loss += sigma.dot(diff.rowwise().squaredNorm());
  }
  return loss;
}

GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi, double tol, int max_iters) {
  if (!(lo < hi)) throw ValidationError("golden_section: require lo < hi");
  if (!(tol > 0.0)) throw ValidationError("golden_section: tol must be positive");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  GoldenResult res;
  auto eval = [&](double x) {
    const double fx = f(x);
    if (!std::isfinite(fx)) {
      throw NumericalError("golden_section: objective is not finite at x = " + std::to_string(x));
    }
    ++res.evaluations;
    res.trace.emplace_back(x, fx);
    return fx;
  };
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  for (int it = 0; it < max_iters && (b - a) >= tol; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval(d);
    }
  }
  const auto best = std::min_element(res.trace.begin(), res.trace.end(),
                                     [](const auto& l, const auto& r) { return l.second < r.second; });
  res.x = best->first;
  res.fx = best->second;
  return res;
}

double alpha_objective(const TPGMM& model, const Dataset& dataset, const StepGaussians& sg, double alpha, int window,
                       const LossConfig& loss) {
  const auto profile = smooth(frame_weights(sg, alpha), window);
  std::vector<Trajectory> generated;
  generated.reserve(dataset.demos.size());
  for (const auto& demo : dataset.demos) {
    // Time column of the demo drives generation (1..T or normalised).
    const std::vector<double> demo_times(demo.points.col(0).data(), demo.points.col(0).data() + demo.length());
    generated.push_back(reproduce_weighted(model, demo.frames, profile, demo_times));
  }
  return weighted_loss(dataset, generated, loss);
}

AlphaSearchResult optimize_alpha(const TPGMM& model, const Dataset& dataset, const AlphaSearchConfig& cfg) {
  return optimize_alpha(model, dataset, fit_step_gaussians(dataset, cfg.step), cfg);
}

AlphaSearchResult optimize_alpha(const TPGMM& model, const Dataset& dataset, const StepGaussians& sg,
                                 const AlphaSearchConfig& cfg) {
  if (!(cfg.lo < cfg.hi)) throw ValidationError("optimize_alpha: bounds must satisfy lo < hi");
  if (cfg.scan_points < 0 || cfg.scan_points == 1) throw ValidationError("optimize_alpha: scan_points must be 0 or >= 2");
  if (sg.T() != static_cast<int>(dataset.demos.front().length()) || sg.P() != dataset.num_frames()) {
    throw ValidationError("optimize_alpha: step Gaussians do not match the dataset");
  }
  AlphaSearchResult res;
  res.window = cfg.window > 0 ? cfg.window : default_window(sg.T());

  auto objective = [&](double alpha) { return alpha_objective(model, dataset, sg, alpha, res.window, cfg.loss); };

  double lo = cfg.lo;
  double hi = cfg.hi;
  if (cfg.scan_points >= 2) {
    const int n = cfg.scan_points;
    std::vector<double> losses(n, std::numeric_limits<double>::infinity());
    int ok = 0;
    for (int k = 0; k < n; ++k) {
      const double alpha = cfg.lo + (cfg.hi - cfg.lo) * k / (n - 1);
      try {
        losses[k] = objective(alpha);
      } catch (const NumericalError&) {
        continue;
      }
      if (!std::isfinite(losses[k])) continue;
      ++ok;
      res.evaluations.emplace_back(alpha, losses[k]);
    }
    if (ok == 0) throw NumericalError("optimize_alpha: every scan candidate failed");
    const int best = static_cast<int>(std::min_element(losses.begin(), losses.end()) - losses.begin());
    const double step = (cfg.hi - cfg.lo) / (n - 1);
    lo = std::max(cfg.lo, cfg.lo + step * (best - 1));
    hi = std::min(cfg.hi, cfg.lo + step * (best + 1));
  }
  const auto refined = golden_section(objective, lo, hi, cfg.tol, cfg.max_iters);
  res.evaluations.insert(res.evaluations.end(), refined.trace.begin(), refined.trace.end());

  const auto best = std::min_element(res.evaluations.begin(), res.evaluations.end(),
                                     [](const auto& l, const auto& r) { return l.second < r.second; });
  res.alpha_star = best->first;
  res.loss_star = best->second;
  return res;
}

}  // namespace wtpgmr
