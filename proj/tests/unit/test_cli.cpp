#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "hipseg/cli/app.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hipseg;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "hipseg");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string> kTinyTrain{"--max-epochs", "2",  "--patience",   "1",  "--epoch-sizes", "8",  "8",
                                          "8",            "--batch-size", "8", "--depth",  "2",  "--base-width",
                                          "2",            "--patch-size", "16", "16",      "--quiet"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// One dataset and one trained ensemble shared by the suite.
class CliFlow : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    scratch_ = new testutil::ScratchDir();
    ASSERT_EQ(run({"synth", "--count", "10", "--seed", "4", "--shape", "32", "32", "32", "--cohorts", "control,resected-left",
                   "--out", (*scratch_ / "data").string()}),
              0);
    ASSERT_EQ(run(concat({"train", "--dataset", (*scratch_ / "data").string(), "--seed", "1", "--out",
                          (*scratch_ / "train").string()},
                         kTinyTrain)),
              0);
  }
  static void TearDownTestSuite() {
    delete scratch_;
    scratch_ = nullptr;
  }
  static fs::path dir(const std::string& s) { return *scratch_ / s; }
  static testutil::ScratchDir* scratch_;
};

testutil::ScratchDir* CliFlow::scratch_ = nullptr;

}  // namespace

TEST_F(CliFlow, SynthLayoutAndDeterminism) {
  const json m = read_json(dir("data") / "manifest.json");
  ASSERT_EQ(m.at("items").size(), 10u);
  int resected = 0;
  for (const auto& it : m.at("items")) {
    EXPECT_TRUE(fs::exists(dir("data") / it.at("volume").get<std::string>()));
    EXPECT_TRUE(fs::exists(dir("data") / it.at("mask").get<std::string>()));
    resected += it.at("cohort") == "resected-left";
  }
  EXPECT_EQ(resected, 5);
  const json run_m = read_json(dir("data") / cli::kRunManifestName);
  EXPECT_EQ(run_m.at("exit_code"), 0);
  EXPECT_GE(run_m.at("outputs").size(), 21u);

  testutil::ScratchDir again;
  ASSERT_EQ(run({"synth", "--count", "10", "--seed", "4", "--shape", "32", "32", "32", "--cohorts", "control,resected-left",
                 "--out", (again / "d").string()}),
            0);
  EXPECT_EQ(read_text(again / "d" / "manifest.json"), read_text(dir("data") / "manifest.json"));
  for (const auto& it : m.at("items")) {
    const std::string rel = it.at("volume").get<std::string>();
    EXPECT_EQ(cli::file_crc32(again / "d" / rel), cli::file_crc32(dir("data") / rel)) << rel;
  }
}

TEST_F(CliFlow, TrainArtifacts) {
  for (const char* o : {"sagittal", "coronal", "axial"}) {
    EXPECT_TRUE(fs::exists(dir("train") / (std::string(o) + ".ckpt")));
    EXPECT_TRUE(fs::exists(dir("train") / (std::string(o) + "_curves.csv")));
    EXPECT_TRUE(fs::exists(dir("train") / (std::string(o) + "_curves.png")));
    const json rep = read_json(dir("train") / (std::string(o) + "_report.json"));
    EXPECT_EQ(rep.at("epochs").size(), 2u);
  }
  const json m = read_json(dir("train") / cli::kRunManifestName);
  EXPECT_EQ(m.at("command"), "train");
  EXPECT_EQ(m.at("exit_code"), 0);
  EXPECT_EQ(m.at("config").at("max_epochs"), 2);
  EXPECT_TRUE(m.at("seeds").contains("coronal"));
  for (const auto& out : m.at("outputs")) EXPECT_EQ(out.at("hash").get<std::string>().rfind("crc32:", 0), 0u);
}

TEST_F(CliFlow, PredictEvaluateAndConsensusReport) {
  ASSERT_EQ(run({"predict", "--checkpoints", dir("train").string(), (dir("data") / "images").string(),
                 "--save-activations", "--out", dir("pred").string()}),
            0);
  const json dm = read_json(dir("data") / "manifest.json");
  for (const auto& it : dm.at("items")) {
    const std::string id = it.at("id");
    EXPECT_TRUE(fs::exists(dir("pred") / (id + "_mask.nii.gz"))) << id;
    EXPECT_TRUE(fs::exists(dir("pred") / (id + "_act_consensus.nii.gz"))) << id;
  }
  ASSERT_EQ(run({"evaluate", "--predictions", dir("pred").string(), "--dataset", dir("data").string(), "--split", "",
                 "--out", dir("eval").string()}),
            0);
  const std::string records = read_text(dir("eval") / "records.csv");
  EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 11);
  EXPECT_NE(read_text(dir("eval") / "summary.csv").find("resected-left,5,"), std::string::npos);

  ASSERT_EQ(run({"consensus-report", "--checkpoints", dir("train").string(), "--dataset", dir("data").string(),
                 "--split", "train", "--out", dir("cons").string()}),
            0);
  EXPECT_TRUE(fs::exists(dir("cons") / "consensus_vs_single.csv"));
  EXPECT_TRUE(fs::exists(dir("cons") / "consensus_vs_single_summary.csv"));
  EXPECT_TRUE(fs::exists(dir("cons") / "consensus_vs_single.png"));

  // Matrix mode with paths relative to the matrix file.
  const json cells = json::array({{{"trained_on", "mixed"}, {"tested_on", "all"}, {"predictions", "pred"},
                                   {"dataset", "data"}, {"split", ""}}});
  std::ofstream(dir("matrix.json")) << cells.dump();
  ASSERT_EQ(run({"evaluate", "--matrix", dir("matrix.json").string(), "--out", dir("matrix_out").string()}), 0);
  EXPECT_NE(read_text(dir("matrix_out") / "matrix.csv").find("mixed,all,10,"), std::string::npos);
}

TEST_F(CliFlow, EvaluateReportsMissingPredictions) {
  testutil::ScratchDir partial;
  ASSERT_EQ(run({"predict", "--checkpoints", dir("train").string(),
                 (dir("data") / "images" / "control-s4-0.nii.gz").string(), "--out", (partial / "p").string()}),
            0);
  try {
    cli::evaluate_directory(partial / "p", dir("data"), "");
    FAIL() << "expected a mismatch error";
  } catch (const cli::CommandError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("missing predictions:"), std::string::npos);
    EXPECT_NE(msg.find("control-s4-1"), std::string::npos);
    EXPECT_EQ(msg.find("control-s4-0 "), std::string::npos);
  }
}

TEST_F(CliFlow, PredictNeedsOrientation) {
  testutil::ScratchDir tmp;
  Volume v;
  v.data = Grid3<float>({32, 32, 32}, 0.1f);
  raw::write(tmp / "noaxes.raw", v);
  EXPECT_EQ(run({"predict", "--checkpoints", dir("train").string(), (tmp / "noaxes.raw").string(), "--out",
                 (tmp / "a").string()}),
            cli::kExitError);
  const json aborted = read_json(tmp / "a" / cli::kRunManifestName);
  EXPECT_EQ(aborted.at("exit_code"), 2);
  EXPECT_EQ(run({"predict", "--checkpoints", dir("train").string(), (tmp / "noaxes.raw").string(),
                 "--assume-canonical", "--out", (tmp / "b").string()}),
            0);
  EXPECT_TRUE(fs::exists(tmp / "b" / "noaxes_mask.raw"));
}

TEST_F(CliFlow, ConfigPrecedence) {
  testutil::ScratchDir tmp;
  std::ofstream(tmp / "cfg.json") << json{{"initial_lr", 0.002}, {"optimizer", "adam"}}.dump();
  cli::TrainOverrides none;
  TrainConfig c = cli::resolve_train_config({"best"}, tmp / "cfg.json", none);
  EXPECT_EQ(c.initial_lr, 0.002);
  EXPECT_EQ(c.optimizer, OptimizerKind::adam);
  EXPECT_EQ(c.loss, LossKind::boundary);  // from the preset
  cli::TrainOverrides flags;
  flags.lr = 0.003;
  c = cli::resolve_train_config({"best"}, tmp / "cfg.json", flags);
  EXPECT_EQ(c.initial_lr, 0.003);
  EXPECT_THROW(cli::resolve_train_config({"nonsense"}, std::nullopt, none), cli::CommandError);
  flags.patience = 5000;
  EXPECT_THROW(cli::resolve_train_config({}, std::nullopt, flags), cli::CommandError);
}

TEST_F(CliFlow, DivergenceExitsWithPartialArtifacts) {
  testutil::ScratchDir tmp;
  std::ofstream(tmp / "cfg.json") << json{{"initial_lr", 1e300}}.dump();
  const int code = run(concat({"train", "--dataset", dir("data").string(), "--config", (tmp / "cfg.json").string(),
                               "--out", (tmp / "t").string()},
                              kTinyTrain));
  EXPECT_EQ(code, cli::kExitDiverged);
  const json m = read_json(tmp / "t" / cli::kRunManifestName);
  EXPECT_EQ(m.at("exit_code"), 3);
  EXPECT_TRUE(fs::exists(tmp / "t" / "sagittal_report.json"));
  EXPECT_EQ(read_json(tmp / "t" / "sagittal_report.json").at("stop_reason"), "diverged");
}

TEST_F(CliFlow, AblateSingleRow) {
  ASSERT_EQ(run(concat({"ablate", "--dataset", dir("data").string(), "--preset", "desk", "--rows", "table-s1-row4",
                        "--out", dir("abl").string()},
                       {"--max-epochs", "2", "--patience", "1", "--epoch-sizes", "8", "8", "8", "--batch-size", "8",
                        "--depth", "2", "--base-width", "2", "--patch-size", "16", "16"})),
            0);
  const std::string csv = read_text(dir("abl") / "ablation.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_NE(csv.find("adam,0.0001,boundary"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir("abl") / "ablation.png"));
  EXPECT_TRUE(fs::exists(dir("abl") / "ablation.json"));
}

TEST(Cli, ErrorsExitTwo) {
  testutil::ScratchDir tmp;
  EXPECT_EQ(run({"synth", "--shape", "16", "16", "16", "--out", (tmp / "s").string()}), cli::kExitError);
  EXPECT_EQ(run({"train", "--dataset", (tmp / "missing").string(), "--out", (tmp / "t").string()}), cli::kExitError);
  EXPECT_EQ(run({"evaluate", "--out", (tmp / "e").string()}), cli::kExitError);
  EXPECT_NE(run({"bogus"}), 0);
}

TEST(Cli, DefaultRunDirUsesRootVariable) {
  testutil::ScratchDir tmp;
  ::setenv(cli::kRunRootEnv, tmp.path.c_str(), 1);
  const cli::SynthResult r = cli::cmd_synth([] {
    cli::SynthOptions o;
    o.count = 3;
    o.seed = 12;
    o.shape = {32, 32, 32};
    o.fractions = {0.4, 0.3, 0.3};
    return o;
  }());
  ::unsetenv(cli::kRunRootEnv);
  EXPECT_EQ(r.dir.parent_path(), tmp.path);
  const std::string name = r.dir.filename().string();
  EXPECT_NE(name.find("-s12-synth"), std::string::npos);
  EXPECT_TRUE(fs::exists(r.dir / "manifest.json"));
}
