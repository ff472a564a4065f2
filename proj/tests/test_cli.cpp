#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "matchlab/cli.hpp"

using namespace matchlab;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("matchlab_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string make_dataset(const std::string& name = "d.json") {
    const CliRun r = run({"dataset", "--synthetic", "er:10:0.3:30", "--queries", "10", "--corpus", "12",
                       "--max-query-nodes", "5", "--max-corpus-nodes", "8", "--seed", "1704", "--out", path(name)});
    EXPECT_EQ(r.code, 0) << r.err;
    return path(name);
  }

  std::vector<std::string> train_args(const std::string& ds, const std::string& tag) {
    return {"train",      "--dataset", ds,       "--distance",   "agg_hinge", "--stage",     "late",
            "--granularity", "node",   "--layers", "2",          "--epochs",  "2",           "--batch-size",
            "8",          "--quiet",   "--checkpoint", path(tag + ".ck.json"), "--metrics", path(tag + ".m.json")};
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, DatasetPrintsResolvedConfigAndPrevalence) {
  const CliRun r = run({"dataset", "--synthetic", "er:30:0.2", "--queries", "10", "--corpus", "20", "--out", path("s.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("resolved configuration:"), std::string::npos);
  EXPECT_NE(r.out.find("\"max_corpus_nodes\""), std::string::npos);
  EXPECT_NE(r.out.find("positive-pair fraction:"), std::string::npos);
  const RetrievalDataset ds = load_dataset(path("s.json"));
  EXPECT_EQ(ds.queries.size(), 10u);
  EXPECT_EQ(ds.corpus.size(), 20u);
}

TEST_F(Cli, DatasetIsByteDeterministic) {
  const std::string a = make_dataset("a.json"), b = make_dataset("b.json");
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
}

TEST_F(Cli, DatasetUsageErrors) {
  EXPECT_EQ(run({"dataset", "--out", path("x.json")}).code, 2);
  EXPECT_EQ(run({"dataset", "--synthetic", "er:10", "--out", path("x.json")}).code, 2);
  EXPECT_EQ(run({"dataset", "--tudataset", path("missing"), "--out", path("x.json")}).code, 2);
  EXPECT_EQ(run({"dataset", "--synthetic", "er:10:0.3", "--tudataset", "x", "--out", path("x.json")}).code, 2);
}

TEST_F(Cli, TrainWritesMetricsThatRoundTrip) {
  const std::string ds = make_dataset();
  const CliRun r = run(train_args(ds, "t"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("resolved configuration:"), std::string::npos);
  const auto m = nlohmann::json::parse(slurp(path("t.m.json")));
  EXPECT_EQ(m.at("format"), kMetricsFormat);
  EXPECT_EQ(m.at("axes"), "agg_hinge/late/NA/NA/node");
  EXPECT_EQ(m.at("val_map_history").size(), m.at("history").at("epochs").size());
  const auto& per_query = m.at("test").at("per_query");
  ASSERT_FALSE(per_query.empty());
  double s = 0.0;
  for (const auto& q : per_query) s += q.at("ap").get<double>();
  EXPECT_NEAR(s / per_query.size(), m.at("test_map").get<double>(), 1e-12);
  EXPECT_DOUBLE_EQ(m.at("test").at("map").get<double>(), m.at("test_map").get<double>());
  const auto timing = nlohmann::json::parse(slurp(path("t.m.timing.json")));
  EXPECT_GT(timing.at("median_pair_latency_us").get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(path("t.ck.json")));
}

TEST_F(Cli, TrainMetricsAreDeterministic) {
  const std::string ds = make_dataset();
  ASSERT_EQ(run(train_args(ds, "a")).code, 0);
  ASSERT_EQ(run(train_args(ds, "b")).code, 0);
  EXPECT_EQ(slurp(path("a.m.json")), slurp(path("b.m.json")));
  EXPECT_EQ(slurp(path("a.ck.json")), slurp(path("b.ck.json")));
}

TEST_F(Cli, LateAggregatedWarnsAboutIgnoredAxes) {
  const std::string ds = make_dataset();
  auto args = train_args(ds, "w");
  args.insert(args.end(), {"--structure", "non_injective", "--nonlinearity", "dot"});
  const CliRun r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("ignored"), std::string::npos);
}

TEST_F(Cli, TrainUsageErrors) {
  EXPECT_EQ(run({"train", "--distance", "set_align"}).code, 2);
  const std::string ds = make_dataset();
  const CliRun bad_axis = run({"train", "--dataset", ds, "--distance", "agg_cosine"});
  EXPECT_EQ(bad_axis.code, 2);
  EXPECT_NE(bad_axis.err.find("agg_cosine"), std::string::npos);
  const CliRun bad_k = run({"train", "--dataset", ds, "--layers", "0"});
  EXPECT_EQ(bad_k.code, 2);
  EXPECT_NE(bad_k.err.find("layers"), std::string::npos);
  EXPECT_EQ(run({"train", "--dataset", path("nope.json")}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
}

TEST_F(Cli, ConfigFileIsOverriddenByFlags) {
  const std::string ds = make_dataset();
  {
    std::ofstream f(path("c.json"));
    f << R"({"model": {"distance": "agg_mlp", "stage": "late", "granularity": "node", "layers": 1},
             "train": {"max_epochs": 1, "margin": 0.25}})";
  }
  const CliRun r = run({"train", "--dataset", ds, "--config", path("c.json"), "--distance", "agg_hinge", "--quiet",
                     "--checkpoint", path("c.ck.json"), "--metrics", path("c.m.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = nlohmann::json::parse(slurp(path("c.m.json")));
  EXPECT_EQ(m.at("model").at("distance"), "agg_hinge");
  EXPECT_EQ(m.at("model").at("layers"), 1);
  EXPECT_EQ(m.at("train").at("margin"), 0.25);
  EXPECT_EQ(m.at("train").at("max_epochs"), 1);
}

TEST_F(Cli, EvalReproducesTrainTestMap) {
  const std::string ds = make_dataset();
  ASSERT_EQ(run(train_args(ds, "e")).code, 0);
  const CliRun r = run({"eval", "--dataset", ds, "--checkpoint", path("e.ck.json"), "--metrics", path("e.eval.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto train_m = nlohmann::json::parse(slurp(path("e.m.json")));
  const auto eval_m = nlohmann::json::parse(slurp(path("e.eval.json")));
  EXPECT_EQ(eval_m.at("map"), train_m.at("test_map"));
  EXPECT_EQ(run({"eval", "--dataset", ds, "--checkpoint", path("e.ck.json"), "--split", "dev"}).code, 2);
  EXPECT_EQ(run({"eval", "--dataset", ds, "--checkpoint", ds}).code, 2);
}

TEST_F(Cli, GridEnumeratesEveryConfiguration) {
  EXPECT_EQ(enumerate_grid().size(), 66u);
  std::set<std::string> labels;
  for (const auto& c : enumerate_grid()) labels.insert(c.axes_label());
  EXPECT_EQ(labels.size(), 66u);

  const std::string ds = make_dataset();
  const CliRun r = run({"grid", "--dataset", ds, "--layers", "1", "--epochs", "1", "--batch-size", "4", "--quiet", "--out",
                     path("g.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(path("g.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("# ", 0), 0u);
  EXPECT_NE(line.find("rows selected: 66"), std::string::npos);
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("distance,stage,structure,nonlinearity,granularity,val_map,test_map", 0), 0u);
  int rows = 0, na = 0;
  while (std::getline(csv, line)) {
    ++rows;
    EXPECT_NE(line.find(",ok"), std::string::npos) << line;
    if (line.find(",NA,NA,") != std::string::npos) ++na;
  }
  EXPECT_EQ(rows, 66);
  EXPECT_EQ(na, 6);
}

TEST_F(Cli, GridFilters) {
  const std::string ds = make_dataset();
  const CliRun r = run({"grid", "--dataset", ds, "--filter", "stage=late", "--filter", "distance=agg_hinge", "--layers",
                     "1", "--epochs", "1", "--quiet", "--out", path("late.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(path("late.csv")));
  std::string line;
  std::getline(csv, line);
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    EXPECT_EQ(line.rfind("agg_hinge,late,", 0), 0u) << line;
  }
  EXPECT_EQ(rows, 2);

  int late = 0;
  for (const auto& c : enumerate_grid())
    if (cli::grid_row_matches(c, {"stage=late"})) ++late;
  EXPECT_EQ(late, 12 + 6);
  EXPECT_EQ(run({"grid", "--dataset", ds, "--filter", "colour=red"}).code, 2);
  EXPECT_EQ(run({"grid", "--dataset", ds, "--filter", "stage=late", "--filter", "stage=early"}).code, 2);
}
