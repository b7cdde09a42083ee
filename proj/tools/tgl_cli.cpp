#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "tgl/bench.hpp"
#include "tgl/pipeline.hpp"
#include "tgl/rtree.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> strategy_args;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void merge_common(tgl::PipelineConfig& config, const CommonOpts& opts) {
  if (!opts.config_path.empty()) tgl::apply_config_file(config, opts.config_path);
  for (const auto& arg : opts.strategy_args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) {
      config.default_strategy = tgl::strategy_from_name(arg);
    } else {
      config.strategy_overrides[arg.substr(0, eq)] =
          tgl::strategy_from_name(arg.substr(eq + 1));
    }
  }
  if (opts.seed_set) config.seed = opts.seed;
  if (opts.threads > 0) config.threads = opts.threads;
}

std::vector<tgl::MMStrategy> parse_strategy_list(const std::string& csv) {
  std::vector<tgl::MMStrategy> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(tgl::strategy_from_name(item));
  if (out.empty()) throw tgl::ConfigError("empty strategy list");
  return out;
}

std::vector<int> parse_thread_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  if (out.empty()) throw tgl::ConfigError("empty thread list");
  return out;
}

int cmd_ingest(const tgl::PipelineConfig& config) {
  std::ifstream in(config.dataset_path);
  if (!in) throw tgl::IoError("cannot open dataset " + config.dataset_path);
  tgl::EdgeStreamParser parser(in);
  auto events = tgl::read_all_events(parser);
  auto snapshots = tgl::bin_into_snapshots(events, config.binning);

  tgl::TemporalGraph graph;
  std::size_t max_delta_edges = 0;
  for (const auto& snap : snapshots) {
    const auto delta = graph.apply_snapshot(snap);
    max_delta_edges = std::max(max_delta_edges, delta.added.size() + delta.removed.size());
  }
  std::cout << "lines_consumed " << parser.lines_consumed() << '\n'
            << "events " << events.size() << '\n'
            << "self_loops_dropped " << parser.self_loops_dropped() << '\n'
            << "malformed_lines " << parser.malformed_lines() << '\n'
            << "snapshots " << snapshots.size() << '\n'
            << "nodes " << graph.node_count() << '\n'
            << "active_edges " << graph.edge_count() << '\n'
            << "max_delta_edges " << max_delta_edges << '\n';
  return 0;
}

int cmd_run(const tgl::PipelineConfig& config) {
  const auto summary = tgl::run_pipeline(config);
  std::cout << "snapshots " << summary.snapshots << '\n'
            << "trained_steps " << summary.trained_steps << '\n'
            << "final_accuracy " << summary.final_accuracy << '\n'
            << "construct_ms " << summary.total_construct_ns / 1000000 << '\n'
            << "walk_repair_ms " << summary.total_walk_ns / 1000000 << '\n'
            << "word2vec_ms " << summary.total_word2vec_ns / 1000000 << '\n'
            << "batch_build_ms " << summary.total_batch_ns / 1000000 << '\n'
            << "train_ms " << summary.total_train_ns / 1000000 << '\n';
  if (!config.output_dir.empty()) {
    std::cout << "wrote " << config.output_dir << "/stage_metrics.csv, kernel_timings.csv, "
              << "summary.txt\n";
  }
  return 0;
}

void report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tgl::IoError("cannot open " + path);
  std::string header;
  std::getline(in, header);
  std::vector<std::string> columns;
  std::stringstream hs(header);
  std::string col;
  while (std::getline(hs, col, ',')) columns.push_back(col);

  std::map<std::string, double> sums;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    std::stringstream ls(line);
    std::string field;
    std::size_t idx = 0;
    while (std::getline(ls, field, ',') && idx < columns.size()) {
      try {
        sums[columns[idx]] += std::stod(field);
      } catch (...) {
        // non-numeric column
      }
      ++idx;
    }
  }
  std::cout << path << ": " << rows << " rows\n";
  for (const auto& c : columns) {
    if (sums.contains(c)) std::cout << "  sum(" << c << ") = " << sums[c] << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal graph learning pipeline"};
  app.require_subcommand(1);

  tgl::PipelineConfig config;
  CommonOpts common;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "flat key = value config file");
    sub->add_option("--seed", common.seed, "RNG seed")->each([&](const std::string&) {
      common.seed_set = true;
    });
    sub->add_option("--threads", common.threads, "worker threads for parallel kernels");
    sub->add_option("--strategy", common.strategy_args,
                    "MM strategy, either NAME (default) or KERNEL=NAME; repeatable");
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "parse a temporal edge list and print stats");
  add_common(ingest);
  ingest->add_option("dataset", config.dataset_path, "edge list file")->required();
  std::size_t ingest_snapshots = 0;
  ingest->add_option("-T,--snapshots", ingest_snapshots, "bin into T snapshots");

  // run
  auto* run = app.add_subcommand("run", "run the full per-timestamp pipeline");
  add_common(run);
  run->add_option("--dataset", config.dataset_path, "edge list file");
  std::string run_task;
  run->add_option("--task", run_task, "link|node");
  run->add_option("--labels", config.label_path, "label file (node task)");
  std::size_t run_snapshots = 0;
  run->add_option("-T,--snapshots", run_snapshots, "bin into T snapshots");
  run->add_option("-B,--batch-size", config.batch_cap, "training batch cap");
  run->add_option("-d,--dim", config.embedding_dim, "embedding dimension");
  run->add_option("-r,--walks-per-node", config.walks_per_node, "walks per node");
  run->add_option("-l,--walk-length", config.walk_length, "walk length");
  run->add_option("-K,--iterations", config.iterations_per_batch, "iterations per batch");
  run->add_option("--out", config.output_dir, "output directory for CSVs");
  run->add_option("--dump-walks", config.walk_dump_path, "write the final walk corpus here");
  run->add_option("--dump-embeddings", config.embedding_dump_path,
                  "write the final embeddings here");
  run->add_option("--dump-model", config.model_dump_path, "write the final FNN weights here");

  // bench-mm
  auto* bench_mm_cmd = app.add_subcommand("bench-mm", "benchmark the four MM strategies");
  add_common(bench_mm_cmd);
  std::string bm_suite = "link";
  std::string bm_strategies = "inner,outer,rowwise,columnwise";
  std::string bm_threads = "1,2,4,8";
  std::size_t bm_batch = 0;
  std::size_t bm_reps = 5;
  std::string bm_out;
  bench_mm_cmd->add_option("--suite", bm_suite, "link|node kernel suite");
  bench_mm_cmd->add_option("--strategies", bm_strategies, "comma list of strategies");
  bench_mm_cmd->add_option("--thread-list", bm_threads, "comma list of thread counts");
  bench_mm_cmd->add_option("-B,--batch-size", bm_batch, "batch size (default per suite)");
  bench_mm_cmd->add_option("--reps", bm_reps, "repetitions per point (median reported)");
  bench_mm_cmd->add_option("--out", bm_out, "CSV output path (default stdout)");
  bool bm_outer_atomic = false;
  bench_mm_cmd->add_flag("--outer-atomic", bm_outer_atomic,
                         "run Outer with atomic cell updates instead of private buffers");

  // bench-fnn
  auto* bench_fnn_cmd =
      app.add_subcommand("bench-fnn", "per-kernel breakdown of one training iteration");
  add_common(bench_fnn_cmd);
  std::string bf_task = "link";
  std::string bf_strategies = "inner,outer,rowwise,columnwise";
  std::string bf_threads = "1";
  std::size_t bf_batch = 0;
  std::size_t bf_reps = 5;
  std::string bf_out;
  bench_fnn_cmd->add_option("--task", bf_task, "link|node");
  bench_fnn_cmd->add_option("--strategies", bf_strategies, "comma list of strategies");
  bench_fnn_cmd->add_option("--thread-list", bf_threads, "comma list of thread counts");
  bench_fnn_cmd->add_option("-B,--batch-size", bf_batch, "batch size (default 1024/512)");
  bench_fnn_cmd->add_option("--reps", bf_reps, "repetitions per point (median reported)");
  bench_fnn_cmd->add_option("--out", bf_out, "CSV output path (default stdout)");

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate a stochastic-block-model edge list");
  add_common(gen);
  std::string gs_out = "synth.txt";
  std::string gs_labels;
  std::size_t gs_nodes = 200;
  std::size_t gs_comms = 2;
  double gs_pin = 0.1;
  double gs_pout = 0.005;
  std::size_t gs_T = 50;
  gen->add_option("--out", gs_out, "edge list output path");
  gen->add_option("--labels-out", gs_labels, "label file output path");
  gen->add_option("-n,--nodes", gs_nodes, "node count");
  gen->add_option("-k,--communities", gs_comms, "community count");
  gen->add_option("--p-in", gs_pin, "intra-community edge probability");
  gen->add_option("--p-out", gs_pout, "inter-community edge probability");
  gen->add_option("-T,--snapshots", gs_T, "timestamps");

  // report
  auto* report = app.add_subcommand("report", "summarize metric CSVs");
  std::vector<std::string> report_files;
  report->add_option("files", report_files, "CSV files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      merge_common(config, common);
      if (ingest_snapshots) config.binning = tgl::BinningPolicy::fixed_count(ingest_snapshots);
      return cmd_ingest(config);
    }
    if (run->parsed()) {
      merge_common(config, common);
      if (!run_task.empty()) {
        config.task = run_task == "node" ? tgl::Task::NodeClassification
                                         : tgl::Task::LinkPrediction;
      }
      if (run_snapshots) config.binning = tgl::BinningPolicy::fixed_count(run_snapshots);
      return cmd_run(config);
    }
    if (bench_mm_cmd->parsed()) {
      merge_common(config, common);
      const auto shapes = bm_suite == "node"
                              ? tgl::node_kernel_shapes(bm_batch ? bm_batch : 512)
                              : tgl::link_kernel_shapes(bm_batch ? bm_batch : 1024);
      const auto rows = tgl::bench_mm(shapes, parse_strategy_list(bm_strategies),
                                      parse_thread_list(bm_threads), bm_reps, config.seed,
                                      bm_outer_atomic);
      if (bm_out.empty()) {
        tgl::write_mm_bench_csv(rows, std::cout);
      } else {
        std::ofstream out(bm_out);
        tgl::write_mm_bench_csv(rows, out);
      }
      return 0;
    }
    if (bench_fnn_cmd->parsed()) {
      merge_common(config, common);
      const tgl::Task task =
          bf_task == "node" ? tgl::Task::NodeClassification : tgl::Task::LinkPrediction;
      const std::size_t batch = bf_batch ? bf_batch : (task == tgl::Task::LinkPrediction ? 1024 : 512);
      const auto rows = tgl::bench_fnn(task, parse_strategy_list(bf_strategies),
                                       parse_thread_list(bf_threads), batch, bf_reps, config.seed);
      if (bf_out.empty()) {
        tgl::write_fnn_bench_csv(rows, std::cout);
      } else {
        std::ofstream out(bf_out);
        tgl::write_fnn_bench_csv(rows, out);
      }
      return 0;
    }
    if (gen->parsed()) {
      merge_common(config, common);
      tgl::gen_synthetic(gs_out, gs_nodes, gs_comms, gs_pin, gs_pout, gs_T, config.seed,
                         gs_labels);
      std::cout << "wrote " << gs_out;
      if (!gs_labels.empty()) std::cout << " and " << gs_labels;
      std::cout << '\n';
      return 0;
    }
    if (report->parsed()) {
      for (const auto& f : report_files) report_csv(f);
      return 0;
    }
  } catch (const tgl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
