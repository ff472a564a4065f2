#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "trainer.hpp"
#include "tudataset.hpp"

namespace matchlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr const char* kCheckpointFormat = "matchlab-checkpoint/1";
inline constexpr const char* kMetricsFormat = "matchlab-metrics/1";

namespace cli {

inline nlohmann::json read_json_file(const std::filesystem::path& p, const char* what) {
  std::ifstream in(p);
  if (!in) throw IngestError(std::string("cannot read ") + what + " file: " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("malformed ") + what + " file " + p.string() + ": " + e.what());
  }
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IngestError("cannot write " + p.string());
  out << text;
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

// Flags collected as strings/numbers and applied after the config file, so
// only options actually given on the command line override it.
struct ModelFlags {
  std::string distance, stage, structure, nonlinearity, granularity;
  int layers = 0, dim_h = 0, dim_m = 0, sinkhorn_steps = 0;
  double tau = 0.0, gumbel = 0.0;
  std::vector<CLI::Option*> opts;

  void attach(CLI::App* app) {
    opts = {app->add_option("--distance", distance, "set_align | agg_hinge | agg_mlp | agg_ntn"),
            app->add_option("--stage", stage, "early | late"),
            app->add_option("--structure", structure, "injective (sinkhorn) | non_injective (attention)"),
            app->add_option("--nonlinearity", nonlinearity, "neural | dot | hinge"),
            app->add_option("--granularity", granularity, "node | edge"),
            app->add_option("--layers", layers, "message-passing layers K"),
            app->add_option("--dim-h", dim_h, "node embedding width"),
            app->add_option("--dim-m", dim_m, "edge embedding width"),
            app->add_option("--tau", tau, "alignment temperature"),
            app->add_option("--sinkhorn-steps", sinkhorn_steps, "Sinkhorn iterations T"),
            app->add_option("--gumbel", gumbel, "Gumbel noise scale during training (0 = off)")};
  }

  void apply(ModelConfig& c) const {
    auto given = [&](int i) { return opts[i]->count() > 0; };
    if (given(0)) c.distance = parse_distance(distance);
    if (given(1)) c.stage = parse_stage(stage);
    if (given(2)) c.structure = parse_structure(structure);
    if (given(3)) c.nonlinearity = parse_nonlinearity(nonlinearity);
    if (given(4)) c.granularity = parse_granularity(granularity);
    if (given(5)) c.layers = layers;
    if (given(6)) c.dim_h = dim_h;
    if (given(7)) c.dim_m = dim_m;
    if (given(8)) c.tau = tau;
    if (given(9)) c.sinkhorn_steps = sinkhorn_steps;
    if (given(10)) c.gumbel_scale = gumbel;
  }
};

struct TrainFlags {
  double margin = 0, lr = 0, weight_decay = 0, min_delta = 0;
  int batch_size = 0, epochs = 0, patience = 0;
  std::uint64_t seed = 0;
  std::vector<CLI::Option*> opts;

  void attach(CLI::App* app) {
    opts = {app->add_option("--margin", margin, "ranking-loss margin"),
            app->add_option("--lr", lr, "Adam learning rate"),
            app->add_option("--weight-decay", weight_decay, "L2 term added to the gradient"),
            app->add_option("--min-delta", min_delta, "early-stopping improvement threshold"),
            app->add_option("--batch-size", batch_size, "triples per batch"),
            app->add_option("--epochs", epochs, "maximum epochs"),
            app->add_option("--patience", patience, "early-stopping patience (epochs)"),
            app->add_option("--seed", seed, "initialization and sampling seed")};
  }

  void apply(TrainConfig& t) const {
    auto given = [&](int i) { return opts[i]->count() > 0; };
    if (given(0)) t.margin = margin;
    if (given(1)) t.adam.lr = lr;
    if (given(2)) t.adam.weight_decay = weight_decay;
    if (given(3)) t.min_delta = min_delta;
    if (given(4)) t.batch_size = batch_size;
    if (given(5)) t.max_epochs = epochs;
    if (given(6)) t.patience = patience;
    if (given(7)) t.seed = seed;
  }
};

// A config file may hold {"model": {...}, "train": {...}} or a flat object
// whose keys are routed to whichever section knows them.
inline void apply_config_file(const std::string& path, ModelConfig* model, TrainConfig* train) {
  if (path.empty()) return;
  const nlohmann::json j = read_json_file(path, "config");
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object: " + path);
  if (model) merge_model_config(*model, j.contains("model") ? j.at("model") : j);
  if (train) merge_train_config(*train, j.contains("train") ? j.at("train") : j);
}

inline void print_resolved(std::ostream& out, const nlohmann::json& resolved) {
  out << "resolved configuration:\n" << resolved.dump(2) << "\n";
}

inline void print_warnings(std::ostream& err, const ModelConfig& c) {
  for (const auto& w : c.warnings()) err << "warning: " << w << "\n";
}

struct SyntheticSpec {
  int n = 0;
  double p = 0.0;
  int count = 100;
};

inline SyntheticSpec parse_synthetic(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
  if ((parts.size() != 3 && parts.size() != 4) || parts[0] != "er") {
    throw UsageError("--synthetic expects er:<n>:<p>[:<count>], got '" + s + "'");
  }
  SyntheticSpec spec;
  try {
    std::size_t used = 0;
    spec.n = std::stoi(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("n");
    spec.p = std::stod(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument("p");
    if (parts.size() == 4) {
      spec.count = std::stoi(parts[3], &used);
      if (used != parts[3].size()) throw std::invalid_argument("count");
    }
  } catch (const std::logic_error&) {
    throw UsageError("--synthetic expects er:<n>:<p>[:<count>], got '" + s + "'");
  }
  return spec;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed << v;
  return os.str();
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

inline nlohmann::json checkpoint_json(const ModelConfig& cfg, const ParameterStore& params) {
  nlohmann::json j = store_to_json(params);
  j["format"] = kCheckpointFormat;
  j["model"] = cfg;
  return j;
}

inline std::filesystem::path timing_path_for(const std::filesystem::path& metrics) {
  std::filesystem::path p = metrics;
  p.replace_extension();
  return p.string() + ".timing.json";
}

// ---- subcommands ------------------------------------------------------------------

struct DatasetArgs {
  std::string tudataset, synthetic, out, config;
  SamplingOptions sampling;
  bool induced = false;
};

inline int cmd_dataset(const DatasetArgs& a, std::ostream& out, std::ostream& err) {
  SamplingOptions opt = a.sampling;
  if (a.induced) opt.semantics = IsoSemantics::induced;
  if (a.tudataset.empty() == a.synthetic.empty()) throw UsageError("dataset: give exactly one of --tudataset or --synthetic");
  nlohmann::json resolved{{"command", "dataset"},
                          {"source", a.tudataset.empty() ? "synthetic " + a.synthetic : "tudataset " + a.tudataset},
                          {"queries", opt.n_queries},
                          {"corpus", opt.n_corpus},
                          {"max_query_nodes", opt.max_query_nodes},
                          {"max_corpus_nodes", opt.max_corpus_nodes},
                          {"seed", opt.seed},
                          {"semantics", semantics_name(opt.semantics)},
                          {"out", a.out}};
  print_resolved(out, resolved);
  GraphCollection source;
  if (!a.tudataset.empty()) {
    source = parse_tudataset(a.tudataset);
  } else {
    const SyntheticSpec s = parse_synthetic(a.synthetic);
    source = synthetic_er(s.n, s.p, s.count, opt.seed);
  }
  const RetrievalDataset ds = sample_query_corpus(source, opt);
  save_dataset(ds, a.out);
  out << "source graphs: " << source.size() << "\n";
  out << "queries: " << ds.queries.size() << ", corpus: " << ds.corpus.size() << "\n";
  out << "positive-pair fraction: " << fmt(ds.positive_fraction()) << "\n";
  out << "wrote " << a.out << "\n";
  (void)err;
  return kExitOk;
}

struct TrainArgs {
  std::string dataset, config, checkpoint = "checkpoint.json", metrics = "metrics.json", timing;
  bool seed_select = false;
  bool quiet = false;
};

inline int cmd_train(const TrainArgs& a, ModelConfig cfg, TrainConfig tc, std::ostream& out, std::ostream& err) {
  cfg.validate();
  tc.validate();
  const std::string timing = a.timing.empty() ? timing_path_for(a.metrics).string() : a.timing;
  print_resolved(out, nlohmann::json{{"command", "train"},
                                     {"dataset", a.dataset},
                                     {"model", cfg},
                                     {"train", tc},
                                     {"seed_select", a.seed_select},
                                     {"threads", tc.workers()},
                                     {"checkpoint", a.checkpoint},
                                     {"metrics", a.metrics},
                                     {"timing", timing}});
  print_warnings(err, cfg);
  const RetrievalDataset ds = load_dataset(a.dataset);

  EpochCallback log;
  if (!a.quiet) {
    log = [&err](const EpochRecord& r) {
      err << "epoch " << r.epoch << " loss " << fmt(r.train_loss) << " val_map "
          << (r.val_map ? fmt(*r.val_map) : std::string("n/a")) << "\n";
    };
  }
  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t seed = tc.seed;
  const TrainResult result = a.seed_select
                                 ? train_with_seed_selection(cfg, ds, tc, {1704, 4929, 7762}, 10, &seed, log)
                                 : train(cfg, ds, tc, log);
  const double train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const EvalReport test = evaluate_map(result.params, cfg, ds, ds.splits.test, 1);
  for (const auto& w : test.warnings) err << "warning: " << w << "\n";

  nlohmann::json val_history = nlohmann::json::array();
  for (const auto& e : result.history.epochs)
    val_history.push_back(e.val_map ? nlohmann::json(*e.val_map) : nlohmann::json(nullptr));
  nlohmann::json metrics{{"format", kMetricsFormat},
                         {"model", cfg},
                         {"axes", cfg.axes_label()},
                         {"train", tc},
                         {"seed", seed},
                         {"test_map", test.defined() ? nlohmann::json(test.map) : nlohmann::json(nullptr)},
                         {"val_map_history", val_history},
                         {"history", history_to_json(result.history)},
                         {"test", report_to_json(test)}};
  write_json(a.checkpoint, checkpoint_json(cfg, result.params));
  write_json(a.metrics, metrics);
  write_json(timing, nlohmann::json{{"train_seconds", train_seconds},
                                    {"scored_pairs", test.pairs},
                                    {"median_pair_latency_us", test.median_pair_latency_us}});
  out << "best epoch " << result.history.best_epoch << " of " << result.history.epochs.size() << "\n";
  out << "test MAP " << (test.defined() ? fmt(test.map) : std::string("undefined")) << "\n";
  out << "wrote " << a.checkpoint << ", " << a.metrics << ", " << timing << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string dataset, checkpoint, metrics, split = "test";
};

inline int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  print_resolved(out, nlohmann::json{{"command", "eval"},
                                     {"dataset", a.dataset},
                                     {"checkpoint", a.checkpoint},
                                     {"split", a.split},
                                     {"metrics", a.metrics}});
  const nlohmann::json ck = read_json_file(a.checkpoint, "checkpoint");
  if (!ck.contains("model") || ck.value("format", "") != kCheckpointFormat) {
    throw IngestError("not a matchlab checkpoint: " + a.checkpoint);
  }
  ModelConfig cfg;
  merge_model_config(cfg, ck.at("model"));
  cfg.validate();
  out << "model: " << nlohmann::json(cfg).dump() << "\n";
  print_warnings(err, cfg);
  const ParameterStore params = store_from_json(ck);
  const RetrievalDataset ds = load_dataset(a.dataset);
  const std::vector<int>* ids = nullptr;
  if (a.split == "test") ids = &ds.splits.test;
  else if (a.split == "val") ids = &ds.splits.val;
  else if (a.split == "train") ids = &ds.splits.train;
  else throw UsageError("eval: --split must be train, val or test");
  const EvalReport r = evaluate_map(params, cfg, ds, *ids, 1);
  for (const auto& w : r.warnings) err << "warning: " << w << "\n";
  out << a.split << " MAP " << (r.defined() ? fmt(r.map) : std::string("undefined")) << " over " << r.queries.size()
      << " queries, median pair latency " << fmt(r.median_pair_latency_us) << " us\n";
  if (!a.metrics.empty()) {
    nlohmann::json m{{"format", kMetricsFormat}, {"model", cfg}, {"axes", cfg.axes_label()}, {"split", a.split},
                     {"map", r.defined() ? nlohmann::json(r.map) : nlohmann::json(nullptr)}, {"report", report_to_json(r)}};
    write_json(a.metrics, m);
  }
  return kExitOk;
}

struct GridArgs {
  std::string dataset, config, out = "grid.csv";
  std::vector<std::string> filters;
  bool quiet = false;
};

// key=value over the five axes; late aggregated rows have no structure or
// nonlinearity, so filters on those axes never match them.
inline bool grid_row_matches(const ModelConfig& c, const std::vector<std::string>& filters) {
  for (const auto& f : filters) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) throw UsageError("--filter expects key=value, got '" + f + "'");
    const std::string key = f.substr(0, eq), value = f.substr(eq + 1);
    std::string have, want;
    if (key == "distance") {
      have = to_string(c.distance), want = to_string(parse_distance(value));
    } else if (key == "stage") {
      have = to_string(c.stage), want = to_string(parse_stage(value));
    } else if (key == "granularity") {
      have = to_string(c.granularity), want = to_string(parse_granularity(value));
    } else if (key == "structure") {
      want = to_string(parse_structure(value));
      if (!c.uses_alignment()) return false;
      have = to_string(c.structure);
    } else if (key == "nonlinearity") {
      want = to_string(parse_nonlinearity(value));
      if (!c.uses_alignment()) return false;
      have = to_string(c.nonlinearity);
    } else {
      throw UsageError("--filter key must be one of distance, stage, structure, nonlinearity, granularity; got '" + key +
                       "'");
    }
    if (have != want) return false;
  }
  return true;
}

inline int cmd_grid(const GridArgs& a, const ModelConfig& base, TrainConfig tc, std::ostream& out, std::ostream& err) {
  base.validate();
  tc.validate();
  std::vector<ModelConfig> rows;
  for (const auto& c : enumerate_grid(base))
    if (grid_row_matches(c, a.filters)) rows.push_back(c);
  print_resolved(out, nlohmann::json{{"command", "grid"},
                                     {"dataset", a.dataset},
                                     {"base_model", base},
                                     {"train", tc},
                                     {"filters", a.filters},
                                     {"rows", rows.size()},
                                     {"out", a.out}});
  if (rows.empty()) throw UsageError("grid: --filter selects no configuration");
  const RetrievalDataset ds = load_dataset(a.dataset);

  std::ostringstream csv;
  csv << "# " << kGridRule << "; rows selected: " << rows.size() << "\n";
  csv << "distance,stage,structure,nonlinearity,granularity,val_map,test_map,train_seconds,median_pair_latency_us,"
         "status\n";
  int ok = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ModelConfig& c = rows[i];
    const bool na = !c.uses_alignment();
    csv << to_string(c.distance) << ',' << to_string(c.stage) << ',' << (na ? "NA" : to_string(c.structure)) << ','
        << (na ? "NA" : to_string(c.nonlinearity)) << ',' << to_string(c.granularity) << ',';
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const TrainResult r = train(c, ds, tc);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const EvalReport test = evaluate_map(r.params, c, ds, ds.splits.test, 1);
      csv << (r.history.best_val_map ? fmt(*r.history.best_val_map) : "") << ','
          << (test.defined() ? fmt(test.map) : "") << ',' << fmt(secs) << ',' << fmt(test.median_pair_latency_us)
          << ",ok\n";
      ++ok;
      if (!a.quiet) err << "[" << i + 1 << "/" << rows.size() << "] " << c.axes_label() << " test MAP "
                        << (test.defined() ? fmt(test.map) : std::string("undefined")) << "\n";
    } catch (const std::exception& e) {
      csv << ",,,," << csv_quote(std::string("error: ") + e.what()) << "\n";
      err << "[" << i + 1 << "/" << rows.size() << "] " << c.axes_label() << " failed: " << e.what() << "\n";
    }
  }
  write_text(a.out, csv.str());
  out << ok << " of " << rows.size() << " configurations succeeded; wrote " << a.out << "\n";
  return ok > 0 ? kExitOk : kExitRuntime;
}

}  // namespace cli

// Entry point shared by the tool and the tests. Exit codes: 0 success,
// 2 usage/configuration error, 3 runtime/numeric error.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"matchlab: neural subgraph matching over five interaction design axes", "matchlab"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "expand help for all subcommands");

  cli::DatasetArgs da;
  auto* ds_cmd = app.add_subcommand("dataset", "sample a query/corpus retrieval dataset");
  ds_cmd->add_option("--tudataset", da.tudataset, "TUDataset directory (<DS>_A.txt, <DS>_graph_indicator.txt)");
  ds_cmd->add_option("--synthetic", da.synthetic, "Erdos-Renyi source er:<n>:<p>[:<count>]");
  ds_cmd->add_option("--queries", da.sampling.n_queries, "number of query graphs")->capture_default_str();
  ds_cmd->add_option("--corpus", da.sampling.n_corpus, "number of corpus graphs")->capture_default_str();
  ds_cmd->add_option("--max-query-nodes", da.sampling.max_query_nodes)->capture_default_str();
  ds_cmd->add_option("--max-corpus-nodes", da.sampling.max_corpus_nodes)->capture_default_str();
  ds_cmd->add_option("--seed", da.sampling.seed)->capture_default_str();
  ds_cmd->add_flag("--induced", da.induced, "induced instead of monotone subgraph relevance");
  ds_cmd->add_option("--out", da.out, "output dataset JSON")->required();

  cli::TrainArgs ta;
  cli::ModelFlags train_model;
  cli::TrainFlags train_flags;
  auto* tr_cmd = app.add_subcommand("train", "train and evaluate one configuration");
  tr_cmd->add_option("--dataset", ta.dataset, "dataset JSON")->required();
  tr_cmd->add_option("--config", ta.config, "JSON config file (flags override it)");
  tr_cmd->add_option("--checkpoint", ta.checkpoint)->capture_default_str();
  tr_cmd->add_option("--metrics", ta.metrics)->capture_default_str();
  tr_cmd->add_option("--timing", ta.timing, "timing JSON (default: <metrics>.timing.json)");
  tr_cmd->add_flag("--seed-select", ta.seed_select, "probe seeds 1704, 4929, 7762 for 10 epochs, keep the best");
  tr_cmd->add_flag("--quiet", ta.quiet, "no per-epoch log");
  train_model.attach(tr_cmd);
  train_flags.attach(tr_cmd);

  cli::EvalArgs ea;
  auto* ev_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  ev_cmd->add_option("--dataset", ea.dataset, "dataset JSON")->required();
  ev_cmd->add_option("--checkpoint", ea.checkpoint)->required();
  ev_cmd->add_option("--split", ea.split)->capture_default_str();
  ev_cmd->add_option("--metrics", ea.metrics, "optional metrics JSON output");

  cli::GridArgs ga;
  cli::ModelFlags grid_model;
  cli::TrainFlags grid_flags;
  auto* gr_cmd = app.add_subcommand("grid", "train every valid axis combination");
  gr_cmd->add_option("--dataset", ga.dataset, "dataset JSON")->required();
  gr_cmd->add_option("--config", ga.config, "JSON config file (flags override it)");
  gr_cmd->add_option("--out", ga.out)->capture_default_str();
  gr_cmd->add_option("--filter", ga.filters, "key=value on an axis; repeatable");
  gr_cmd->add_flag("--quiet", ga.quiet);
  grid_model.attach(gr_cmd);
  grid_flags.attach(gr_cmd);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (ds_cmd->parsed()) return cli::cmd_dataset(da, out, err);
    if (tr_cmd->parsed()) {
      ModelConfig cfg;
      TrainConfig tc;
      cli::apply_config_file(ta.config, &cfg, &tc);
      train_model.apply(cfg);
      train_flags.apply(tc);
      return cli::cmd_train(ta, cfg, tc, out, err);
    }
    if (ev_cmd->parsed()) return cli::cmd_eval(ea, out, err);
    if (gr_cmd->parsed()) {
      ModelConfig cfg;
      TrainConfig tc;
      cli::apply_config_file(ga.config, &cfg, &tc);
      grid_model.apply(cfg);
      grid_flags.apply(tc);
      return cli::cmd_grid(ga, cfg, tc, out, err);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IngestError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace matchlab
