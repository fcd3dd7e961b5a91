#include "wtpgmr/pipeline.hpp"

#include "wtpgmr/errors.hpp"

#include <algorithm>

namespace wtpgmr {

RelevanceProfile TrainedModel::profile(std::optional<double> a) const {
  const auto value = a ? a : alpha;
  if (!value) throw ValidationError("model has no alpha; run optimize-alpha or pass one explicitly");
  return smooth(frame_weights(steps, *value), window);
}

ModelBundle TrainedModel::bundle(Method method) const {
  ModelBundle b;
  b.model = gmm;
  b.times = times;
  if (method == Method::WTPGMR) b.profile = profile();
  return b;
}

TrainedModel train_model(const Dataset& dataset, const TrainConfig& cfg) {
  dataset.validate();
  if (!dataset.aligned()) throw ValidationError("train: demonstrations are not aligned (resample first)");
  if (dataset.num_demos() < 2) throw ValidationError("train: need at least 2 demonstrations");
  TrainedModel m;
  const auto em = fit_em(dataset, cfg.K, cfg.em);
  m.gmm = em.model;
  m.em_log_likelihood = em.log_likelihood;
  m.steps = fit_step_gaussians(dataset, cfg.step);
  m.window = default_window(m.steps.T());
  const auto& t = dataset.demos.front().points.col(0);
  m.times.assign(t.data(), t.data() + t.size());
  for (const auto& d : dataset.demos) m.demo_frames.push_back(d.frames);
  BoxConfig boxes = cfg.boxes;
  const int last = dataset.num_frames() - 1;
  boxes.start_frame = std::min(boxes.start_frame, last);
  boxes.goal_frame = std::min(boxes.goal_frame, last);
  m.boxes = fit_constraint_boxes(dataset, boxes);
  m.meta = dataset.meta;
  m.meta.position_dims = dataset.position_dims();
  return m;
}

AlphaSearchResult fit_alpha(TrainedModel& model, const Dataset& dataset, const AlphaSearchConfig& cfg) {
  dataset.validate();
  if (dataset.dim() != model.gmm.D() || dataset.num_frames() != model.gmm.P()) {
    throw ValidationError("optimize-alpha: dataset dimensions do not match the model");
  }
  const auto res = optimize_alpha(model.gmm, dataset, model.steps, cfg);
  model.alpha = res.alpha_star;
  model.window = res.window;
  return res;
}

}  // namespace wtpgmr
