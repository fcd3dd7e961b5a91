#include "wtpgmr/cli.hpp"
#include "wtpgmr/dataio.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using wtpgmr::json;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "wtpgmr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return wtpgmr::cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workdir {
  fs::path dir;
  explicit Workdir(const std::string& name) : dir(fs::temp_directory_path() / ("wtpgmr_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  std::string operator()(const std::string& f) const { return (dir / f).string(); }
};

}  // namespace

TEST_CASE("end-to-end pipeline") {
  const Workdir w("pipe");
  CHECK(run({"gen-data", "reaching", "--M", "4", "--T", "60", "--seed", "7", "--out", w("d.json")}) == 0);
  CHECK(run({"train", "--data", w("d.json"), "--K", "3", "--out", w("m.json")}) == 0);
  const auto m = wtpgmr::read_json(w("m.json"));
  CHECK(m["K"] == 3);
  CHECK(m["P"] == 2);
  CHECK(m["alpha"].is_null());
  CHECK(m["metadata"]["inputs"]["data"]["sha256"].get<std::string>().size() == 64);

  CHECK(run({"grid-eval", "--model", w("m.json"), "--cells", "3", "--method", "wtpgmr", "--report", w("g.json")}) == 1);
  CHECK(run({"optimize-alpha", "--model", w("m.json"), "--data", w("d.json"), "--scan", "9", "--out", w("ma.json")}) == 0);
  CHECK(fs::exists(w("ma.trace.csv")));
  CHECK(wtpgmr::read_json(w("ma.json"))["alpha"].is_number());

  wtpgmr::write_text(w("f.json"), R"({"frames": [
    {"A": [[1,0,0],[0,1,0],[0,0,1]], "b": [0, 1.0, 1.0]},
    {"A": [[1,0,0],[0,1,0],[0,0,1]], "b": [0, -0.8, -0.8]}]})");
  CHECK(run({"reproduce", "--model", w("ma.json"), "--frames", w("f.json"), "--method", "wtpgmr", "--out", w("r.csv")}) == 0);
  const auto r = wtpgmr::parse_csv(slurp(w("r.csv")));
  CHECK(r.rows.size() == 60);
  CHECK(fs::exists(w("r.csv.meta.json")));

  CHECK(run({"weights", "--model", w("ma.json"), "--out", w("wt.csv")}) == 0);
  CHECK(wtpgmr::parse_csv(slurp(w("wt.csv"))).rows.size() == 60);

  CHECK(run({"grid-eval", "--model", w("ma.json"), "--cells", "21", "--report", w("g.json")}) == 0);
  CHECK(wtpgmr::parse_csv(slurp(w("g.tpgmr.csv"))).rows.size() == 441);
  CHECK(wtpgmr::parse_csv(slurp(w("g.wtpgmr.csv"))).rows.size() == 441);
  const auto g = wtpgmr::read_json(w("g.json"));
  CHECK(g["summary"].contains("wtpgmr"));

  CHECK(run({"cross-validate", "--data", w("d.json"), "--K", "2", "--method", "tpgmr", "--report", w("cv.json")}) == 0);
  const auto cv = wtpgmr::read_json(w("cv.json"));
  CHECK(cv["folds"].size() == 4);
  CHECK(fs::exists(w("cv.csv")));
}

TEST_CASE("outputs are byte-identical across runs") {
  const Workdir w("det");
  for (const char* suffix : {"1", "2"}) {
    const std::string s(suffix);
    REQUIRE(run({"gen-data", "reaching", "--T", "40", "--seed", "3", "--out", w("d.json")}) == 0);
    REQUIRE(run({"train", "--data", w("d.json"), "--out", w("m.json")}) == 0);
    REQUIRE(run({"optimize-alpha", "--model", w("m.json"), "--data", w("d.json"), "--scan", "5", "--out", w("a.json")}) == 0);
    fs::copy_file(w("d.json"), w("d" + s), fs::copy_options::overwrite_existing);
    fs::copy_file(w("a.json"), w("a" + s), fs::copy_options::overwrite_existing);
    fs::copy_file(w("a.trace.csv"), w("t" + s), fs::copy_options::overwrite_existing);
  }
  CHECK(slurp(w("d1")) == slurp(w("d2")));
  CHECK(slurp(w("a1")) == slurp(w("a2")));
  CHECK(slurp(w("t1")) == slurp(w("t2")));
}

TEST_CASE("exit codes") {
  const Workdir w("exit");
  CHECK(run({}) == 1);
  CHECK(run({"train"}) == 1);
  CHECK(run({"gen-data", "spiral", "--out", w("x.json")}) == 1);
  CHECK(run({"train", "--data", w("missing.json"), "--out", w("m.json")}) == 1);
  wtpgmr::write_text(w("bad.json"), "{ not json");
  CHECK(run({"train", "--data", w("bad.json"), "--out", w("m.json")}) == 1);

  // time samples leave the middle EM bin empty
  wtpgmr::write_text(w("gap.json"), R"({
    "schema_version": 1, "name": "gap", "D": 2, "P": 1, "channel_names": [],
    "demos": [
      {"points": [[1, 0.0], [2, 1.0], [100, 2.0]], "frames": [{"A": [[1, 0], [0, 1]], "b": [0, 0]}]},
      {"points": [[1, 0.1], [2, 0.9], [100, 2.1]], "frames": [{"A": [[1, 0], [0, 1]], "b": [0, 0]}]}
    ]})");
  CHECK(run({"train", "--data", w("gap.json"), "--K", "3", "--n-pts", "1", "--out", w("m.json")}) == 2);
  CHECK(run({"--help"}) == 0);
}
