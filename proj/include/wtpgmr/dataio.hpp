#pragma once

#include "wtpgmr/evalx.hpp"
#include "wtpgmr/optimize.hpp"
#include "wtpgmr/pipeline.hpp"
#include "wtpgmr/relevance.hpp"
#include "wtpgmr/tpmodel.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace wtpgmr {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Sorted keys, two-space indent, shortest round-trip doubles, trailing newline.
std::string canonical_dump(const json& j);

json frame_to_json(const TaskFrame& f);
TaskFrame frame_from_json(const json& j, const std::string& path = "$");
json frames_to_json(const std::vector<TaskFrame>& frames);
/// Accepts either a bare array of frames or {"frames": [...]}.
std::vector<TaskFrame> frames_from_json(const json& j, const std::string& path = "$");

json dataset_to_json(const Dataset& ds, const json& metadata = json::object());
/// Schema and invariant checks; errors name the offending JSON path.
Dataset dataset_from_json(const json& j);

json model_to_json(const TrainedModel& model, const json& metadata = json::object());
TrainedModel model_from_json(const json& j);

json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& path, const json& metadata = json::object());
TrainedModel load_model(const std::filesystem::path& path);
void save_model(const TrainedModel& model, const std::filesystem::path& path, const json& metadata = json::object());

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// "%.17g"
std::string format_double(double v);

/// Columns: step, time, then mean_<c> for each channel, then var_<c>.
std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& channel_names = {});
/// Columns: step, frame_1..frame_P.
std::string profile_csv(const RelevanceProfile& profile);
/// Columns: cell_x, cell_y, path_length, start_err, end_err, task_err, constraint_err, flags.
std::string grid_csv(const GridReport& report);
/// Columns: alpha, loss.
std::string trace_csv(const std::vector<std::pair<double, double>>& evaluations);
/// Columns: fold, rmse, alpha.
std::string loo_csv(const LooResult& result);

void export_csv(const std::filesystem::path& path, const std::string& csv_text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable parse_csv(const std::string& text);

json summary_to_json(const GridSummary& s);

}  // namespace wtpgmr
