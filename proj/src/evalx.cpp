#include "wtpgmr/evalx.hpp"

#include "wtpgmr/errors.hpp"
#include "wtpgmr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wtpgmr {

std::string to_string(Method m) { return m == Method::TPGMR ? "tpgmr" : "wtpgmr"; }

Method method_from_string(const std::string& s) {
  if (s == "tpgmr") return Method::TPGMR;
  if (s == "wtpgmr") return Method::WTPGMR;
  throw ValidationError("unknown method '" + s + "' (expected tpgmr|wtpgmr)");
}

bool Box::contains(const Vec& p) const {
  return p.size() == lo.size() && (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

double path_length(const Trajectory& traj, int position_dims) {
  if (position_dims < 1 || position_dims > traj.means.cols()) throw ValidationError("path_length: bad position_dims");
  double len = 0.0;
  for (Eigen::Index n = 1; n < traj.means.rows(); ++n) {
    len += (traj.means.row(n).head(position_dims) - traj.means.row(n - 1).head(position_dims)).norm();
  }
  return len;
}

std::pair<double, double> endpoint_errors(const Trajectory& traj, const TaskFrame& start, const TaskFrame& goal,
                                          int position_dims) {
  if (traj.means.rows() == 0) throw ValidationError("endpoint_errors: empty trajectory");
  const auto last = traj.means.rows() - 1;
  const double s = (traj.means.row(0).head(position_dims).transpose() - start.b.segment(1, position_dims)).norm();
  const double e = (traj.means.row(last).head(position_dims).transpose() - goal.b.segment(1, position_dims)).norm();
  return {s, e};
}

Vec local_position(const Vec& spatial_mean, const TaskFrame& frame, int position_dims) {
  const auto out = frame.dim() - 1;
  if (spatial_mean.size() != out) throw ValidationError("local_position: dimension mismatch");
  const Mat A = frame.A.bottomRightCorner(out, out);
  const Vec local = A.partialPivLu().solve(spatial_mean - frame.b.tail(out));
  return local.head(position_dims);
}

ConstraintBoxes fit_constraint_boxes(const Dataset& dataset, const BoxConfig& cfg) {
  dataset.validate();
  if (cfg.n_pts < 1) throw ValidationError("fit_constraint_boxes: n_pts must be positive");
  if (cfg.margin < 0.0) throw ValidationError("fit_constraint_boxes: margin must be non-negative");
  const int P = dataset.num_frames();
  if (cfg.start_frame < 0 || cfg.start_frame >= P || cfg.goal_frame < 0 || cfg.goal_frame >= P) {
    throw ValidationError("fit_constraint_boxes: frame index out of range");
  }
  const int pd = dataset.position_dims();
  auto fit = [&](int frame, bool at_start) {
    Box box{Vec::Constant(pd, std::numeric_limits<double>::infinity()),
            Vec::Constant(pd, -std::numeric_limits<double>::infinity())};
    for (const auto& demo : dataset.demos) {
      if (demo.length() < cfg.n_pts) throw ValidationError("fit_constraint_boxes: demonstration shorter than n_pts");
      const Mat local = project(demo, frame);
      const auto first = at_start ? 0 : demo.length() - cfg.n_pts;
      for (Eigen::Index n = first; n < first + cfg.n_pts; ++n) {
        const Vec p = local.row(n).segment(1, pd).transpose();
        box.lo = box.lo.cwiseMin(p);
        box.hi = box.hi.cwiseMax(p);
      }
    }
    const double grow = cfg.margin * (box.hi - box.lo).maxCoeff();
    box.lo.array() -= grow;
    box.hi.array() += grow;
    return box;
  };
  ConstraintBoxes boxes;
  boxes.n_pts = cfg.n_pts;
  boxes.start_frame = cfg.start_frame;
  boxes.goal_frame = cfg.goal_frame;
  boxes.start_box = fit(cfg.start_frame, true);
  boxes.goal_box = fit(cfg.goal_frame, false);
  return boxes;
}

int constraint_error(const Trajectory& traj, const TaskFrame& start, const TaskFrame& goal,
                     const ConstraintBoxes& boxes, int position_dims) {
  int in_start = 0;
  int in_goal = 0;
  for (Eigen::Index n = 0; n < traj.means.rows(); ++n) {
    const Vec x = traj.means.row(n).transpose();
    if (boxes.start_box.contains(local_position(x, start, position_dims))) ++in_start;
    if (boxes.goal_box.contains(local_position(x, goal, position_dims))) ++in_goal;
  }
  return std::abs(in_start - boxes.n_pts) + std::abs(in_goal - boxes.n_pts);
}

Stat mean_std(std::span<const double> values) {
  Stat s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

LooResult loo_cross_validate(const Dataset& dataset, Method method, const LooConfig& cfg) {
  dataset.validate();
  const int M = dataset.num_demos();
  if (M < 2) throw ValidationError("loo_cross_validate: need at least 2 demonstrations");
  if (!dataset.aligned()) throw ValidationError("loo_cross_validate: demonstrations are not aligned (resample first)");
  if (method == Method::WTPGMR && M < 3) {
    throw ValidationError("loo_cross_validate: wTP-GMR needs at least 3 demonstrations");
  }
  LooResult res;
  res.folds.resize(M);
  parallel_for(
      static_cast<std::size_t>(M),
      [&](std::size_t fold) {
        const int m = static_cast<int>(fold);
        const Dataset train = dataset.without(m);
        const auto& held = dataset.demos[m];
        const auto em = fit_em(train, cfg.K, cfg.em);
        const std::vector<double> times(held.points.col(0).data(), held.points.col(0).data() + held.length());
        LooFold f{m, 0.0, 0.0};
        if (method == Method::TPGMR) {
          f.rmse = trajectory_rmse(held, reproduce(em.model, held.frames, times));
        } else {
          const auto search = optimize_alpha(em.model, train, cfg.alpha);
          const auto sg = fit_step_gaussians(train, cfg.alpha.step);
          const auto profile = smooth(frame_weights(sg, search.alpha_star), search.window);
          f.alpha = search.alpha_star;
          f.rmse = trajectory_rmse(held, reproduce_weighted(em.model, held.frames, profile, times));
        }
        res.folds[fold] = f;
      },
      cfg.threads);
  std::vector<double> rmses;
  for (const auto& f : res.folds) rmses.push_back(f.rmse);
  const auto s = mean_std(rmses);
  res.rmse_mean = s.mean;
  res.rmse_std = s.std;
  return res;
}

Trajectory ModelBundle::generate(std::span<const TaskFrame> frames) const {
  if (profile) return reproduce_weighted(model, frames, *profile, times);
  return reproduce(model, frames, times);
}

void GridSpec::validate() const {
  if (!(x_max > x_min) || !(y_max > y_min)) throw ValidationError("grid: ranges must be non-degenerate");
  if (cells_per_side < 1) throw ValidationError("grid: cells_per_side must be positive");
  if (goal_frame.dim() != 3) throw ValidationError("grid: planar (t, x, y) frames required");
  if (start_frame == goal_frame_index || start_frame < 0 || start_frame > 1 || goal_frame_index < 0 ||
      goal_frame_index > 1) {
    throw ValidationError("grid: frame indices must be {0, 1}");
  }
}

std::pair<double, double> GridSpec::cell_center(int ix, int iy) const {
  const double wx = (x_max - x_min) / cells_per_side;
  const double wy = (y_max - y_min) / cells_per_side;
  return {x_min + (ix + 0.5) * wx, y_min + (iy + 0.5) * wy};
}

double planar_angle(const TaskFrame& frame) {
  if (frame.dim() != 3) throw ValidationError("planar_angle: planar (t, x, y) frame required");
  return std::atan2(frame.A(2, 1), frame.A(1, 1));
}

double mean_frame_angle(const std::vector<std::vector<TaskFrame>>& demo_frames, int frame) {
  double s = 0.0;
  double c = 0.0;
  for (const auto& frames : demo_frames) {
    const double a = planar_angle(frames.at(frame));
    s += std::sin(a);
    c += std::cos(a);
  }
  if (std::hypot(s, c) < 1e-12) throw ValidationError("mean_frame_angle: orientations cancel out");
  return std::atan2(s, c);
}

GridSpec make_grid_spec(const std::vector<std::vector<TaskFrame>>& demo_frames, double extent, int cells,
                        OrientationRule rule, double fixed_angle, int start_frame, int goal_frame) {
  if (demo_frames.empty()) throw ValidationError("make_grid_spec: no demonstration frames");
  if (!(extent > 0.0)) throw ValidationError("make_grid_spec: extent must be positive");
  GridSpec g;
  g.x_min = g.y_min = -extent / 2.0;
  g.x_max = g.y_max = extent / 2.0;
  g.cells_per_side = cells;
  g.orientation_rule = rule;
  g.start_frame = start_frame;
  g.goal_frame_index = goal_frame;
  g.start_angle = rule == OrientationRule::DemoMean ? mean_frame_angle(demo_frames, start_frame) : fixed_angle;
  double gx = 0.0;
  double gy = 0.0;
  for (const auto& frames : demo_frames) {
    gx += frames.at(goal_frame).b(1);
    gy += frames.at(goal_frame).b(2);
  }
  gx /= static_cast<double>(demo_frames.size());
  gy /= static_cast<double>(demo_frames.size());
  g.goal_frame = TaskFrame::planar(gx, gy, mean_frame_angle(demo_frames, goal_frame));
  g.validate();
  return g;
}

GridReport grid_eval(const ModelBundle& bundle, const GridSpec& grid, const ConstraintBoxes& boxes, int position_dims,
                     int threads) {
  grid.validate();
  if (bundle.model.P() != 2) throw ValidationError("grid_eval: two-frame model required");
  const int n = grid.cells_per_side;
  GridReport rep;
  rep.rows.resize(static_cast<std::size_t>(n * n));
  parallel_for(
      rep.rows.size(),
      [&](std::size_t idx) {
        const int iy = static_cast<int>(idx) / n;
        const int ix = static_cast<int>(idx) % n;
        const auto [cx, cy] = grid.cell_center(ix, iy);
        std::vector<TaskFrame> frames(2);
        frames[grid.start_frame] = TaskFrame::planar(cx, cy, grid.start_angle);
        frames[grid.goal_frame_index] = grid.goal_frame;
        GridRow row{cx, cy, {}};
        try {
          const auto traj = bundle.generate(frames);
          auto& m = row.metrics;
          m.path_length = path_length(traj, position_dims);
          std::tie(m.start_error, m.end_error) =
              endpoint_errors(traj, frames[grid.start_frame], frames[grid.goal_frame_index], position_dims);
          m.task_error = 0.5 * (m.start_error + m.end_error);
          m.constraint_error =
              constraint_error(traj, frames[grid.start_frame], frames[grid.goal_frame_index], boxes, position_dims);
          if (traj.fallback_steps > 0) m.flags = "gmr_fallback";
        } catch (const std::exception& e) {
          row.metrics = TrajMetrics{};
          row.metrics.failed = true;
          row.metrics.flags = "failed";
        }
        rep.rows[idx] = row;
      },
      threads);

  std::vector<double> pl, se, ee, te, ce;
  for (const auto& r : rep.rows) {
    if (r.metrics.failed) {
      ++rep.summary.failures;
      continue;
    }
    pl.push_back(r.metrics.path_length);
    se.push_back(r.metrics.start_error);
    ee.push_back(r.metrics.end_error);
    te.push_back(r.metrics.task_error);
    ce.push_back(r.metrics.constraint_error);
  }
  rep.summary.cells = static_cast<int>(rep.rows.size());
  rep.summary.path_length = mean_std(pl);
  rep.summary.start_error = mean_std(se);
  rep.summary.end_error = mean_std(ee);
  rep.summary.task_error = mean_std(te);
  rep.summary.constraint_error = mean_std(ce);
  return rep;
}

std::pair<int, int> hand_events(std::span<const double> hand, double threshold) {
  int close = -1;
  for (std::size_t n = 0; n < hand.size(); ++n) {
    if (hand[n] < threshold) {
      close = static_cast<int>(n);
      break;
    }
  }
  if (close < 0) return {-1, -1};
  for (std::size_t n = static_cast<std::size_t>(close) + 1; n < hand.size(); ++n) {
    if (hand[n] >= threshold) return {close, static_cast<int>(n)};
  }
  return {close, -1};
}

CriticalReference fit_critical_reference(const Dataset& dataset, double threshold, int grasp_frame, int place_frame) {
  dataset.validate();
  CriticalReference ref;
  ref.threshold = threshold;
  ref.grasp_frame = grasp_frame;
  ref.place_frame = place_frame;
  ref.position_dims = dataset.position_dims();
  ref.hand_channel = dataset.out_dim() - 1;
  if (ref.hand_channel < ref.position_dims) throw ValidationError("critical reference: no hand channel");
  const int pd = ref.position_dims;
  const int out = dataset.out_dim();
  ref.start = Vec::Zero(pd);
  ref.grasp_local = Vec::Zero(pd);
  ref.place_local = Vec::Zero(pd);
  for (std::size_t m = 0; m < dataset.demos.size(); ++m) {
    const auto& d = dataset.demos[m];
    const Vec hand = d.points.col(ref.hand_channel + 1);
    const auto [close, open] = hand_events(std::span<const double>(hand.data(), hand.size()), threshold);
    if (close < 0 || open < 0) {
      throw ValidationError("critical reference: demos[" + std::to_string(m) + "] never closes and reopens the hand");
    }
    ref.start += d.points.row(0).segment(1, pd).transpose();
    ref.grasp_local += local_position(d.points.row(close).tail(out).transpose(), d.frames.at(grasp_frame), pd);
    ref.place_local += local_position(d.points.row(open).tail(out).transpose(), d.frames.at(place_frame), pd);
  }
  const double M = static_cast<double>(dataset.demos.size());
  ref.start /= M;
  ref.grasp_local /= M;
  ref.place_local /= M;
  return ref;
}

CriticalErrors critical_point_errors(const Trajectory& traj, std::span<const TaskFrame> frames,
                                     const CriticalReference& ref) {
  if (ref.hand_channel >= traj.means.cols()) throw ValidationError("critical_point_errors: trajectory has no hand channel");
  CriticalErrors err;
  const int pd = ref.position_dims;
  err.start_error = (traj.means.row(0).head(pd).transpose() - ref.start).norm();
  const Vec hand = traj.means.col(ref.hand_channel);
  const auto [close, open] = hand_events(std::span<const double>(hand.data(), hand.size()), ref.threshold);
  if (close < 0) {
    err.grasp_failed = true;
    err.place_failed = true;
    err.grasp_error = err.place_error = std::numeric_limits<double>::quiet_NaN();
    return err;
  }
  err.grasp_error =
      (local_position(traj.means.row(close).transpose(), frames[ref.grasp_frame], pd) - ref.grasp_local).norm();
  if (open < 0) {
    err.place_failed = true;
    err.place_error = std::numeric_limits<double>::quiet_NaN();
  } else {
    err.place_error =
        (local_position(traj.means.row(open).transpose(), frames[ref.place_frame], pd) - ref.place_local).norm();
  }
  return err;
}

}  // namespace wtpgmr
