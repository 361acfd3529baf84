#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fui/harness/cli.hpp"
#include "fui/harness/config.hpp"
#include "fui/harness/run_dir.hpp"

using namespace fui;
using namespace fui::harness;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("fui_harness_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

// Small, fast run for the command-line tests.
const char* kSmallConfig =
    "synth_samples = 2000\n"
    "clients = 4\n"
    "rounds = 3\n"
    "delta = 0.05\n"
    "d_policy = history-max\n";

int run_cli_process(const std::string& args, std::string* output = nullptr) {
  TempDir out;
  const std::string cmd = std::string(FUI_CLI_PATH) + " " + args + " > " + (out.path() / "stdout").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) *output = read_text(out.path() / "stdout");
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~ScopedEnv() { ::unsetenv(name_); }

 private:
  const char* name_;
};

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  const Config cfg = parse_config("");
  EXPECT_EQ(serialize_config(cfg), serialize_config(Config{}));
  EXPECT_EQ(cfg.clients, 10);
  EXPECT_EQ(cfg.eta, 5.0);
  EXPECT_EQ(cfg.epsilon, 5.0);
}

TEST(Config, OverrideIsIdempotentAndCommentsIgnored) {
  const Config a = parse_config("eta = 5\n");
  const Config b = parse_config("# comment\n  eta=5   # trailing\n\neta = 5\n");
  EXPECT_EQ(serialize_config(a), serialize_config(b));
  EXPECT_EQ(parse_config("rounds = 4").rounds, 4);
  EXPECT_EQ(parse_config("sweep_eta = 1, 2.5,3").sweep_eta, (std::vector<double>{1.0, 2.5, 3.0}));
}

TEST(Config, EpsilonAboveDpLevelIsRejected) {
  // eta^2 / 2 = 12.5 at the default eta.
  try {
    parse_config("epsilon = 20");
    FAIL() << "expected ParameterError";
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(parse_config("epsilon = 12"));
  EXPECT_THROW(parse_config("epsilon = 12.5"), ParameterError);
  EXPECT_THROW(parse_config("epsilon = 0.05"), ParameterError);  // below eps_min
}

TEST(Config, UnknownKeyAndTypeErrorsAreReported) {
  try {
    parse_config("eta = 5\nbogus_key = 1\n");
    FAIL() << "expected ParameterError";
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus_key"), std::string::npos) << e.what();
  }
  try {
    parse_config("eta = 5\n\nrounds = many\n");
    FAIL() << "expected ParameterError";
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config("clients 10"), ParameterError);
  EXPECT_THROW(parse_config("dataset = csv"), ParameterError);
  EXPECT_THROW(parse_config("d_policy = widest"), ParameterError);
}

TEST(Config, SerializationRoundTrips) {
  Config cfg = parse_config("eta = 3.7\nepsilon = 0.3\nmodel = mlp\nhidden = 7\nsweep_epsilon = 0.1,0.25\nseed = 99");
  const Config back = parse_config(serialize_config(cfg));
  EXPECT_EQ(serialize_config(back), serialize_config(cfg));
  EXPECT_EQ(back.eta, 3.7);
  EXPECT_EQ(back.model, "mlp");
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.sweep_epsilon, cfg.sweep_epsilon);
}

TEST(Config, SeedEnvironmentOverride) {
  TempDir dir;
  const auto path = dir.write("c.cfg", "seed = 3\n");
  EXPECT_EQ(load_config(path.string()).seed, 3u);
  {
    ScopedEnv env("FUI_SEED", "17");
    EXPECT_EQ(load_config(path.string()).seed, 17u);
  }
  {
    ScopedEnv env("FUI_SEED", "abc");
    EXPECT_THROW(load_config(path.string()), ParameterError);
  }
}

TEST(Config, RelativeCsvPathsResolveAgainstConfigFile) {
  const Config cfg = load_config(std::string(FUI_CONFIG_DIR) + "/adult_like.cfg");
  EXPECT_TRUE(fs::path(cfg.csv_path).is_absolute());
  EXPECT_TRUE(fs::exists(cfg.csv_path)) << cfg.csv_path;
  EXPECT_TRUE(fs::exists(cfg.csv_schema)) << cfg.csv_schema;
}

TEST(Config, ShippedConfigsAreValid) {
  for (const auto* name : {"default.cfg", "convex.cfg", "adult_like.cfg"})
    EXPECT_NO_THROW(load_config(std::string(FUI_CONFIG_DIR) + "/" + name)) << name;
}

TEST(RunDirectory, HistoryRoundTripsBitwise) {
  TempDir dir;
  const Config cfg = parse_config(kSmallConfig);
  const vecnum::RngStream root(cfg.seed);
  const auto data = eval::prepare_data(cfg, root);
  const auto spec = eval::model_spec(cfg, data.train);
  const auto history = dpfl::run_dpfl(eval::dpfl_config(cfg, spec), data.clients, root.child("train"));
  const RunDirectory run(dir.path() / "run");
  EXPECT_THROW(run.write_history(history), IoError);  // meta first
  run.write_meta(cfg, data);
  run.write_history(history);
  const auto back = run.read_history();
  EXPECT_EQ(back.initial, history.initial);
  ASSERT_EQ(back.num_rounds(), history.num_rounds());
  for (int t = 1; t <= history.num_rounds(); ++t) {
    EXPECT_EQ(back.round(t).global, history.round(t).global);
    EXPECT_EQ(back.round(t).broadcast, history.round(t).broadcast);
    EXPECT_EQ(back.round(t).submissions, history.round(t).submissions);
  }
  EXPECT_EQ(back.client_sizes, history.client_sizes);
  EXPECT_EQ(back.sigma_uplink, history.sigma_uplink);
  EXPECT_EQ(back.sigma_downlink, history.sigma_downlink);
  EXPECT_EQ(serialize_config(run.read_config()), serialize_config(cfg));
}

TEST(RunDirectory, MetricsAppendKeepsHeaderOnce) {
  TempDir dir;
  const RunDirectory run(dir.path());
  eval::EvalReport r;
  r.method = "fui";
  r.dataset = "synthetic";
  r.accuracy = 0.5;
  run.append_metrics(r, false);
  r.method = "retrain";
  run.append_metrics(r, true);
  const auto rows = lines(read_text(run.metrics_path()));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "method,dataset,seed,accuracy,prediction_loss,runtime_s,mia_precision,mia_recall");
  EXPECT_EQ(rows[1].rfind("fui,synthetic,", 0), 0u);
  EXPECT_EQ(rows[2].rfind("retrain,synthetic,", 0), 0u);
}

TEST(Cli, TrainUnlearnMiaWritesMetricsRows) {
  TempDir dir;
  const auto cfg = dir.write("small.cfg", kSmallConfig);
  const auto run = dir.path() / "run";
  std::string out;
  ASSERT_EQ(run_cli_process("train --config " + cfg.string() + " --out " + run.string(), &out), 0) << out;
  ASSERT_EQ(run_cli_process("unlearn --run " + run.string() + " --target 1 --epsilon 2", &out), 0) << out;
  ASSERT_EQ(run_cli_process("mia --run " + run.string() + " --model unlearned", &out), 0) << out;
  ASSERT_EQ(run_cli_process("retrain --run " + run.string() + " --target 1", &out), 0) << out;
  ASSERT_EQ(run_cli_process("mia --run " + run.string() + " --model retrained", &out), 0) << out;

  EXPECT_TRUE(fs::exists(run / "meta.json"));
  EXPECT_TRUE(fs::exists(run / "rounds" / "3" / "broadcast.fv"));
  EXPECT_TRUE(fs::exists(run / "unlearned.fv"));
  const auto calib = json::parse(read_text(run / "calibration.json"));
  EXPECT_EQ(calib.at("target").get<int>(), 1);
  EXPECT_LE(calib.at("retraction_distance").get<double>(), 0.05 + 1e-12);

  const auto rows = lines(read_text(run / "metrics.csv"));
  ASSERT_EQ(rows.size(), 6u);
  const std::vector<std::string> methods{"original", "fui", "fui", "retrain", "retrain"};
  for (std::size_t i = 0; i < methods.size(); ++i) EXPECT_EQ(rows[i + 1].substr(0, rows[i + 1].find(',')), methods[i]);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const auto cfg = dir.write("small.cfg", kSmallConfig);
  const auto run = dir.path() / "run";
  std::string out;
  ASSERT_EQ(run_cli_process("train --config " + cfg.string() + " --out " + run.string(), &out), 0) << out;
  // eta = 5, so epsilon must stay below 12.5.
  EXPECT_EQ(run_cli_process("unlearn --run " + run.string() + " --target 0 --epsilon 13", &out), 1);
  EXPECT_NE(out.find("epsilon"), std::string::npos) << out;
  EXPECT_EQ(run_cli_process("unlearn --run " + run.string() + " --target 9 --epsilon 1", &out), 1) << out;
  EXPECT_EQ(run_cli_process("frobnicate", &out), 1);
  EXPECT_EQ(run_cli_process("train --out " + run.string() + " --config " + (dir.path() / "none.cfg").string(), &out),
            1);
  EXPECT_EQ(run_cli_process("mia --run " + run.string() + " --model retrained", &out), 2) << out;
  dir.write("bad.cfg", "rounds = many\n");
  EXPECT_EQ(run_cli_process("train --config " + (dir.path() / "bad.cfg").string() + " --out " +
                                (dir.path() / "r2").string(),
                            &out),
            1);
}

TEST(Cli, TrainingTwiceIsBitwiseIdentical) {
  TempDir dir;
  const auto cfg = dir.write("small.cfg", kSmallConfig);
  ASSERT_EQ(run_cli_process("train --config " + cfg.string() + " --out " + (dir.path() / "a").string()), 0);
  ASSERT_EQ(run_cli_process("train --config " + cfg.string() + " --out " + (dir.path() / "b").string()), 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir.path() / "a" / "rounds")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir.path() / "a");
    EXPECT_EQ(read_text(e.path()), read_text(dir.path() / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 2u + 3u * (2u + 4u));
}

TEST(Cli, GameSolveAndSweepWriteCsv) {
  TempDir dir;
  std::string out;
  ASSERT_EQ(run_cli_process("game solve --out " + dir.path().string(), &out), 0) << out;
  const auto solve = lines(read_text(dir.path() / "game_solve.csv"));
  ASSERT_EQ(solve.size(), 2u);
  EXPECT_EQ(solve[1].rfind("true,", 0), 0u);
  const auto cfg = dir.write("g.cfg", "game_d_rest = 9000\n");
  ASSERT_EQ(run_cli_process("game sweep --config " + cfg.string() + " --out " + dir.path().string(), &out), 0) << out;
  const auto sweep = lines(read_text(dir.path() / "game_sweep.csv"));
  EXPECT_EQ(sweep[0], "param,value,combo,p,epsilon,utility_server,utility_client,feasible");
  EXPECT_GT(sweep.size(), 40u);
}

TEST(Cli, InProcessHelpAndUsage) {
  std::ostringstream out, err;
  const char* help[] = {"fui", "--help"};
  EXPECT_EQ(run_cli(2, help, out, err), kOk);
  EXPECT_NE(out.str().find("unlearn"), std::string::npos);
  const char* none[] = {"fui"};
  EXPECT_EQ(run_cli(1, none, out, err), kUsage);
}
