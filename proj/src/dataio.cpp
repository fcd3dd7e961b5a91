#include "wtpgmr/dataio.hpp"

#include "wtpgmr/errors.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace wtpgmr {

namespace {

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(path + "." + key + ": missing");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ValidationError(path + ": expected an integer");
  return j.get<int>();
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

Vec vec_from(const json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path + ": expected an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Mat mat_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ValidationError(path + ": expected a non-empty array of rows");
  const auto cols = j[0].is_array() ? j[0].size() : 0;
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) throw ValidationError(rp + ": ragged row (expected " + std::to_string(cols) + " values)");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

json gaussian_json(const Gaussian& g) { return {{"mean", vec_json(g.mean)}, {"cov", mat_json(g.cov)}}; }

Gaussian gaussian_from(const json& j, const std::string& path) {
  Gaussian g;
  g.mean = vec_from(field(j, "mean", path), path + ".mean");
  g.cov = mat_from(field(j, "cov", path), path + ".cov");
  try {
    g.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return g;
}

json box_json(const Box& b) { return {{"lo", vec_json(b.lo)}, {"hi", vec_json(b.hi)}}; }

Box box_from(const json& j, const std::string& path) {
  return {vec_from(field(j, "lo", path), path + ".lo"), vec_from(field(j, "hi", path), path + ".hi")};
}

std::vector<std::string> strings_from(const json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path + ": expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw ValidationError(path + "[" + std::to_string(i) + "]: expected a string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

void check_schema(const json& j, const std::string& path) {
  const int v = integer(field(j, "schema_version", path), path + ".schema_version");
  if (v != kSchemaVersion) {
    throw ValidationError(path + ".schema_version: unsupported version " + std::to_string(v));
  }
}

}  // namespace

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

json frame_to_json(const TaskFrame& f) { return {{"A", mat_json(f.A)}, {"b", vec_json(f.b)}}; }

TaskFrame frame_from_json(const json& j, const std::string& path) {
  TaskFrame f(mat_from(field(j, "A", path), path + ".A"), vec_from(field(j, "b", path), path + ".b"));
  try {
    f.validate(true);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return f;
}

json frames_to_json(const std::vector<TaskFrame>& frames) {
  json a = json::array();
  for (const auto& f : frames) a.push_back(frame_to_json(f));
  return a;
}

std::vector<TaskFrame> frames_from_json(const json& j, const std::string& path) {
  if (j.is_object()) return frames_from_json(field(j, "frames", path), path + ".frames");
  if (!j.is_array() || j.empty()) throw ValidationError(path + ": expected a non-empty array of frames");
  std::vector<TaskFrame> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(frame_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

json dataset_to_json(const Dataset& ds, const json& metadata) {
  json demos = json::array();
  for (const auto& d : ds.demos) demos.push_back({{"points", mat_json(d.points)}, {"frames", frames_to_json(d.frames)}});
  return {{"schema_version", kSchemaVersion},
          {"name", ds.meta.name},
          {"D", ds.dim()},
          {"P", ds.num_frames()},
          {"channel_names", ds.meta.channel_names},
          {"position_dims", ds.meta.position_dims},
          {"demos", demos},
          {"metadata", metadata}};
}

Dataset dataset_from_json(const json& j) {
  const std::string root = "$";
  check_schema(j, root);
  Dataset ds;
  const auto& name = field(j, "name", root);
  if (!name.is_string()) throw ValidationError("$.name: expected a string");
  ds.meta.name = name.get<std::string>();
  const int D = integer(field(j, "D", root), "$.D");
  const int P = integer(field(j, "P", root), "$.P");
  ds.meta.channel_names = strings_from(field(j, "channel_names", root), "$.channel_names");
  if (j.contains("position_dims")) ds.meta.position_dims = integer(j["position_dims"], "$.position_dims");
  if (!ds.meta.channel_names.empty() && static_cast<int>(ds.meta.channel_names.size()) != D) {
    throw ValidationError("$.channel_names: expected " + std::to_string(D) + " names");
  }
  if (ds.meta.position_dims < 0 || ds.meta.position_dims > D - 1) throw ValidationError("$.position_dims: out of range");
  const auto& demos = field(j, "demos", root);
  if (!demos.is_array() || demos.empty()) throw ValidationError("$.demos: expected a non-empty array");
  for (std::size_t m = 0; m < demos.size(); ++m) {
    const std::string path = "$.demos[" + std::to_string(m) + "]";
    Demonstration d;
    d.points = mat_from(field(demos[m], "points", path), path + ".points");
    if (d.points.cols() != D) throw ValidationError(path + ".points: expected " + std::to_string(D) + " columns");
    d.frames = frames_from_json(field(demos[m], "frames", path), path + ".frames");
    if (static_cast<int>(d.frames.size()) != P) throw ValidationError(path + ".frames: expected " + std::to_string(P) + " frames");
    for (int f = 0; f < P; ++f) {
      if (d.frames[f].dim() != D) {
        throw ValidationError(path + ".frames[" + std::to_string(f) + "]: expected dimension " + std::to_string(D));
      }
    }
    ds.demos.push_back(std::move(d));
  }
  try {
    ds.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("$: ") + e.what());
  }
  return ds;
}

json model_to_json(const TrainedModel& model, const json& metadata) {
  const auto& g = model.gmm;
  json frames_models = json::array();
  for (int j = 0; j < g.P(); ++j) {
    json per = json::array();
    for (int i = 0; i < g.K(); ++i) per.push_back(gaussian_json(g.components[i][j]));
    frames_models.push_back(per);
  }
  json steps = json::array();
  for (int n = 0; n < model.steps.T(); ++n) {
    json per = json::array();
    for (int j = 0; j < model.steps.P(); ++j) per.push_back(gaussian_json(model.steps.at(n, j)));
    steps.push_back(per);
  }
  json demo_frames = json::array();
  for (const auto& f : model.demo_frames) demo_frames.push_back(frames_to_json(f));
  json meta = {{"name", model.meta.name},
               {"channel_names", model.meta.channel_names},
               {"position_dims", model.meta.position_dims},
               {"times", model.times},
               {"demo_frames", demo_frames},
               {"boxes",
                {{"start", box_json(model.boxes.start_box)},
                 {"goal", box_json(model.boxes.goal_box)},
                 {"n_pts", model.boxes.n_pts},
                 {"start_frame", model.boxes.start_frame},
                 {"goal_frame", model.boxes.goal_frame}}},
               {"em_log_likelihood", model.em_log_likelihood}};
  return {{"schema_version", kSchemaVersion},
          {"K", g.K()},
          {"P", g.P()},
          {"D", g.D()},
          {"priors", vec_json(g.priors)},
          {"frames_models", frames_models},
          {"step_gaussians", steps},
          {"alpha", model.alpha ? json(*model.alpha) : json(nullptr)},
          {"window", model.window},
          {"training_meta", meta},
          {"metadata", metadata}};
}

TrainedModel model_from_json(const json& j) {
  const std::string root = "$";
  check_schema(j, root);
  TrainedModel m;
  const int K = integer(field(j, "K", root), "$.K");
  const int P = integer(field(j, "P", root), "$.P");
  const int D = integer(field(j, "D", root), "$.D");
  m.gmm.priors = vec_from(field(j, "priors", root), "$.priors");
  if (m.gmm.priors.size() != K) throw ValidationError("$.priors: expected " + std::to_string(K) + " values");
  const auto& fm = field(j, "frames_models", root);
  if (!fm.is_array() || static_cast<int>(fm.size()) != P) throw ValidationError("$.frames_models: expected " + std::to_string(P) + " frames");
  m.gmm.components.assign(K, std::vector<Gaussian>(P));
  for (int f = 0; f < P; ++f) {
    const std::string path = "$.frames_models[" + std::to_string(f) + "]";
    if (!fm[f].is_array() || static_cast<int>(fm[f].size()) != K) throw ValidationError(path + ": expected " + std::to_string(K) + " components");
    for (int i = 0; i < K; ++i) {
      m.gmm.components[i][f] = gaussian_from(fm[f][i], path + "[" + std::to_string(i) + "]");
      if (m.gmm.components[i][f].dim() != D) throw ValidationError(path + "[" + std::to_string(i) + "]: expected dimension " + std::to_string(D));
    }
  }
  try {
    m.gmm.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("$: ") + e.what());
  }
  const auto& sj = field(j, "step_gaussians", root);
  if (!sj.is_array() || sj.empty()) throw ValidationError("$.step_gaussians: expected a non-empty array");
  std::vector<std::vector<Gaussian>> grid;
  for (std::size_t n = 0; n < sj.size(); ++n) {
    const std::string path = "$.step_gaussians[" + std::to_string(n) + "]";
    if (!sj[n].is_array() || static_cast<int>(sj[n].size()) != P) throw ValidationError(path + ": expected " + std::to_string(P) + " frames");
    std::vector<Gaussian> row;
    for (int f = 0; f < P; ++f) row.push_back(gaussian_from(sj[n][f], path + "[" + std::to_string(f) + "]"));
    grid.push_back(std::move(row));
  }
  m.steps = StepGaussians::from_grid(std::move(grid));
  const auto& alpha = field(j, "alpha", root);
  if (!alpha.is_null()) m.alpha = number(alpha, "$.alpha");
  m.window = integer(field(j, "window", root), "$.window");

  const auto& meta = field(j, "training_meta", root);
  const std::string mp = "$.training_meta";
  m.meta.name = field(meta, "name", mp).get<std::string>();
  m.meta.channel_names = strings_from(field(meta, "channel_names", mp), mp + ".channel_names");
  m.meta.position_dims = integer(field(meta, "position_dims", mp), mp + ".position_dims");
  const Vec times = vec_from(field(meta, "times", mp), mp + ".times");
  m.times.assign(times.data(), times.data() + times.size());
  if (static_cast<int>(m.times.size()) != m.steps.T()) throw ValidationError(mp + ".times: length must match step_gaussians");
  const auto& df = field(meta, "demo_frames", mp);
  if (!df.is_array()) throw ValidationError(mp + ".demo_frames: expected an array");
  for (std::size_t d = 0; d < df.size(); ++d) {
    m.demo_frames.push_back(frames_from_json(df[d], mp + ".demo_frames[" + std::to_string(d) + "]"));
  }
  const auto& bj = field(meta, "boxes", mp);
  m.boxes.start_box = box_from(field(bj, "start", mp + ".boxes"), mp + ".boxes.start");
  m.boxes.goal_box = box_from(field(bj, "goal", mp + ".boxes"), mp + ".boxes.goal");
  m.boxes.n_pts = integer(field(bj, "n_pts", mp + ".boxes"), mp + ".boxes.n_pts");
  m.boxes.start_frame = integer(field(bj, "start_frame", mp + ".boxes"), mp + ".boxes.start_frame");
  m.boxes.goal_frame = integer(field(bj, "goal_frame", mp + ".boxes"), mp + ".boxes.goal_frame");
  const Vec ll = vec_from(field(meta, "em_log_likelihood", mp), mp + ".em_log_likelihood");
  m.em_log_likelihood.assign(ll.data(), ll.data() + ll.size());
  return m;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Dataset load_dataset(const std::filesystem::path& path) { return dataset_from_json(read_json(path)); }

void save_dataset(const Dataset& ds, const std::filesystem::path& path, const json& metadata) {
  write_text(path, canonical_dump(dataset_to_json(ds, metadata)));
}

TrainedModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

void save_model(const TrainedModel& model, const std::filesystem::path& path, const json& metadata) {
  write_text(path, canonical_dump(model_to_json(model, metadata)));
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& channel_names) {
  const auto out = traj.means.cols();
  std::vector<std::string> names;
  for (Eigen::Index c = 0; c < out; ++c) {
    const auto idx = static_cast<std::size_t>(c + 1);
    names.push_back(idx < channel_names.size() ? channel_names[idx] : "x" + std::to_string(c + 1));
  }
  std::ostringstream os;
  os << "step,time";
  for (const auto& n : names) os << ",mean_" << n;
  for (const auto& n : names) os << ",var_" << n;
  os << "\n";
  for (Eigen::Index n = 0; n < traj.length(); ++n) {
    os << n + 1 << "," << format_double(traj.times(n));
    for (Eigen::Index c = 0; c < out; ++c) os << "," << format_double(traj.means(n, c));
    for (Eigen::Index c = 0; c < out; ++c) os << "," << format_double(traj.covs[n](c, c));
    os << "\n";
  }
  return os.str();
}

std::string profile_csv(const RelevanceProfile& profile) {
  std::ostringstream os;
  os << "step";
  for (int j = 0; j < profile.P(); ++j) os << ",frame_" << j + 1;
  os << "\n";
  for (int n = 0; n < profile.T(); ++n) {
    os << n + 1;
    for (int j = 0; j < profile.P(); ++j) os << "," << format_double(profile.weights(n, j));
    os << "\n";
  }
  return os.str();
}

std::string grid_csv(const GridReport& report) {
  std::ostringstream os;
  os << "cell_x,cell_y,path_length,start_err,end_err,task_err,constraint_err,flags\n";
  for (const auto& r : report.rows) {
    const auto& m = r.metrics;
    os << format_double(r.cell_x) << "," << format_double(r.cell_y) << "," << format_double(m.path_length) << ","
       << format_double(m.start_error) << "," << format_double(m.end_error) << "," << format_double(m.task_error)
       << "," << m.constraint_error << "," << m.flags << "\n";
  }
  return os.str();
}

std::string trace_csv(const std::vector<std::pair<double, double>>& evaluations) {
  std::ostringstream os;
  os << "alpha,loss\n";
  for (const auto& [a, l] : evaluations) os << format_double(a) << "," << format_double(l) << "\n";
  return os.str();
}

std::string loo_csv(const LooResult& result) {
  std::ostringstream os;
  os << "fold,rmse,alpha\n";
  for (const auto& f : result.folds) os << f.held_out << "," << format_double(f.rmse) << "," << format_double(f.alpha) << "\n";
  return os.str();
}

void export_csv(const std::filesystem::path& path, const std::string& csv_text) { write_text(path, csv_text); }

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

json summary_to_json(const GridSummary& s) {
  auto stat = [](const Stat& st) { return json{{"mean", st.mean}, {"std", st.std}}; };
  return {{"path_length", stat(s.path_length)},
          {"start_err", stat(s.start_error)},
          {"end_err", stat(s.end_error)},
          {"task_err", stat(s.task_error)},
          {"constraint_err", stat(s.constraint_error)},
          {"cells", s.cells},
          {"failures", s.failures}};
}

}  // namespace wtpgmr
