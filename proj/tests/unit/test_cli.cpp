#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aia/cli.hpp"
#include "aia/config.hpp"
#include "aia/errors.hpp"
#include "test_helpers.hpp"

namespace fs = std::filesystem;
using namespace aia;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path run_dir_of(const std::string& out) {
  const std::string key = "run_dir: ";
  const auto pos = out.rfind(key);
  REQUIRE(pos != std::string::npos);
  const auto end = out.find('\n', pos);
  return out.substr(pos + key.size(), end - pos - key.size());
}

fs::path write_config(const fs::path& dir, const nlohmann::json& doc, const std::string& name = "cfg.json") {
  std::ofstream(dir / name) << doc.dump(2);
  return dir / name;
}

nlohmann::json tiny_config(const std::string& model) {
  return {{"model", model},
          {"seed", 3},
          {"timesteps", 5},
          {"hidden", {8}},
          {"epochs", 2},
          {"batch_size", 4},
          {"learning_rate", 0.01},
          {"dataset",
           {{"kind", "poisson"}, {"class_count", 3}, {"neurons", 10}, {"n_per_class", 6}, {"test_fraction", 0.25}}}};
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig d = parse_run_config(nlohmann::json::object());
  CHECK(d.model == NeuronModel::LIF);
  CHECK(d.timesteps == 10);
  CHECK(d.train.adam.learning_rate == 1e-3);
  try {
    parse_run_config({{"lerning_rate", 0.1}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("lerning_rate") != std::string::npos);
  }
  try {
    parse_run_config({{"dataset", {{"rate_lo", "x"}}}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("dataset.rate_lo") != std::string::npos);
  }
  const RunConfig c = parse_run_config(tiny_config("cached-aia"));
  CHECK(c.model == NeuronModel::CachedAIA);
  CHECK(parse_run_config(to_json(c)).train.batch_size == 4);
}

TEST_CASE("usage errors exit 2") {
  const auto dir = testutil::scratch_dir("cli_usage");
  CHECK(call({}).code == cli::kUsage);
  CHECK(call({"frobnicate"}).code == cli::kUsage);
  CHECK(call({"eval"}).code == cli::kUsage);
  const auto bad = write_config(dir, {{"lerning_rate", 0.1}});
  const CliResult r = call({"train", "--config", bad.string(), "--out", (dir / "runs").string()});
  CHECK(r.code == cli::kUsage);
  CHECK(r.err.find("lerning_rate") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "runs"));
  CHECK(call({"train", "--model", "lstm", "--out", (dir / "runs").string()}).code == cli::kUsage);
}

TEST_CASE("gradcheck command") {
  const CliResult ok = call({"gradcheck"});
  CHECK(ok.code == cli::kOk);
  CHECK(ok.out.find("gradcheck: PASS") != std::string::npos);
  CHECK(ok.out.find("cached-aia layer0.beta") != std::string::npos);

  GradcheckOptions broken;
  broken.tamper = [](GradientSet& g) { g.dW[0][0] += 0.05; };
  std::ostringstream out;
  CHECK(cli::run_gradcheck(RunConfig{}, broken, out) == cli::kCheckFailed);
  CHECK(out.str().find("FAIL") != std::string::npos);
}

TEST_CASE("train, eval and analyze round trip") {
  const auto dir = testutil::scratch_dir("cli_train");
  const auto cfg = write_config(dir, tiny_config("cached-aia"));
  const std::string runs = (dir / "runs").string();

  const CliResult t1 = call({"train", "--config", cfg.string(), "--out", runs});
  REQUIRE(t1.code == cli::kOk);
  const fs::path d1 = run_dir_of(t1.out);
  for (const char* f : {"config.json", "checkpoint.json", "metrics.json", "metrics.csv"}) CHECK(fs::exists(d1 / f));

  const CliResult t2 = call({"train", "--config", cfg.string(), "--out", runs});
  REQUIRE(t2.code == cli::kOk);
  const fs::path d2 = run_dir_of(t2.out);
  CHECK(d1 != d2);
  CHECK(read_file(d1 / "metrics.csv") == read_file(d2 / "metrics.csv"));
  CHECK(read_file(d1 / "checkpoint.json") == read_file(d2 / "checkpoint.json"));

  const CliResult t3 = call({"train", "--config", cfg.string(), "--out", runs, "--seed", "4"});
  REQUIRE(t3.code == cli::kOk);
  CHECK(read_file(run_dir_of(t3.out) / "checkpoint.json") != read_file(d1 / "checkpoint.json"));

  const nlohmann::json metrics = nlohmann::json::parse(read_file(d1 / "metrics.json"));
  const double final_acc = metrics.at("epochs").back().at("test_accuracy").get<double>();
  const CliResult ev = call({"eval", "--config", cfg.string(), "--checkpoint", (d1 / "checkpoint.json").string(),
                             "--merge-beta"});
  REQUIRE(ev.code == cli::kOk);
  std::istringstream lines(ev.out);
  std::string key;
  double acc = -1;
  lines >> key >> acc;
  CHECK(key == "accuracy:");
  CHECK(acc == final_acc);
  CHECK(ev.out.find("max_readout_deviation:") != std::string::npos);

  const CliResult an = call({"analyze", "--config", cfg.string(), "--out", runs, "--checkpoint-a",
                             (d1 / "checkpoint.json").string(), "--checkpoint-b", (d1 / "checkpoint.json").string()});
  REQUIRE(an.code == cli::kOk);
  const fs::path da = run_dir_of(an.out);
  std::istringstream shift(read_file(da / "weight_shift.csv"));
  std::string row;
  std::getline(shift, row);
  CHECK(row == "bin_lo,bin_hi,count_a,count_b,delta");
  while (std::getline(shift, row)) CHECK(row.substr(row.rfind(',') + 1) == "0");
  CHECK(fs::exists(da / "spike_counts.csv"));
}

TEST_CASE("divergence exits 3") {
  const auto dir = testutil::scratch_dir("cli_diverge");
  auto doc = tiny_config("lif");
  doc["learning_rate"] = 1e308;
  const auto cfg = write_config(dir, doc);
  const CliResult r = call({"train", "--config", cfg.string(), "--out", (dir / "runs").string()});
  CHECK(r.code == cli::kDiverged);
  CHECK(r.err.find("diverged") != std::string::npos);
}

TEST_CASE("analyze rejects mismatched checkpoints") {
  const auto dir = testutil::scratch_dir("cli_mismatch");
  auto doc = tiny_config("lif");
  doc["epochs"] = 1;
  const auto cfg = write_config(dir, doc);
  doc["hidden"] = {5};
  const auto cfg2 = write_config(dir, doc, "cfg2.json");
  const std::string runs = (dir / "runs").string();
  const auto a = run_dir_of(call({"train", "--config", cfg.string(), "--out", runs}).out);
  const auto b = run_dir_of(call({"train", "--config", cfg2.string(), "--out", runs}).out);
  const CliResult r = call({"analyze", "--config", cfg.string(), "--out", runs, "--checkpoint-a",
                            (a / "checkpoint.json").string(), "--checkpoint-b", (b / "checkpoint.json").string()});
  CHECK(r.code == cli::kUsage);
}

TEST_CASE("merge-beta on a LIF checkpoint is a no-op") {
  const auto dir = testutil::scratch_dir("cli_lifmerge");
  auto doc = tiny_config("lif");
  doc["epochs"] = 1;
  const auto cfg = write_config(dir, doc);
  const auto d = run_dir_of(call({"train", "--config", cfg.string(), "--out", (dir / "runs").string()}).out);
  const CliResult ev =
      call({"eval", "--config", cfg.string(), "--checkpoint", (d / "checkpoint.json").string(), "--merge-beta"});
  REQUIRE(ev.code == cli::kOk);
  CHECK(ev.out.find("max_readout_deviation: 0.000e+00") != std::string::npos);
}

TEST_CASE("gen-data is reproducible and its cache can be trained on") {
  const auto dir = testutil::scratch_dir("cli_gen");
  const auto cfg = write_config(dir, tiny_config("aia"));
  const std::string runs = (dir / "runs").string();
  const CliResult g1 = call({"gen-data", "--config", cfg.string(), "--out", runs});
  const CliResult g2 = call({"gen-data", "--config", cfg.string(), "--out", runs});
  REQUIRE(g1.code == cli::kOk);
  const fs::path d1 = run_dir_of(g1.out);
  CHECK(read_file(d1 / "dataset.bin") == read_file(run_dir_of(g2.out) / "dataset.bin"));

  auto cached = tiny_config("aia");
  cached["dataset"] = {{"kind", "cache"}, {"manifest", (d1 / "dataset.json").string()}, {"test_fraction", 0.25}};
  const auto cfg_cache = write_config(dir, cached, "cached.json");
  const CliResult t = call({"train", "--config", cfg_cache.string(), "--out", runs});
  CHECK(t.code == cli::kOk);
  const CliResult t0 = call({"train", "--config", cfg.string(), "--out", runs});
  CHECK(read_file(run_dir_of(t.out) / "metrics.csv") == read_file(run_dir_of(t0.out) / "metrics.csv"));
}

TEST_CASE("event ingestion skips empty files") {
  const fs::path cfg = fs::path(AIA_SOURCE_DIR) / "configs" / "events.json";
  const auto dir = testutil::scratch_dir("cli_events");
  const CliResult r = call({"gen-data", "--config", cfg.string(), "--out", (dir / "runs").string()});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.err.find("skipped 1 empty") != std::string::npos);
  CHECK(r.out.find("samples: 6") != std::string::npos);
  const CliResult t = call({"train", "--config", cfg.string(), "--out", (dir / "runs").string()});
  CHECK(t.code == cli::kOk);
}

TEST_CASE("run directories are never reused") {
  const auto dir = testutil::scratch_dir("cli_dirs");
  const fs::path a = cli::make_run_dir(dir);
  const fs::path b = cli::make_run_dir(dir);
  CHECK(a != b);
  CHECK(fs::is_directory(a));
  CHECK(a.filename().string().rfind("run-", 0) == 0);
}
