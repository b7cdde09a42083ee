#include "tgl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "tgl/rng.hpp"
#include "tgl/rtree.hpp"

namespace tgl {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t ns_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

void shuffle_rows(Matrix& inputs, Matrix& targets, Rng& rng) {
  for (std::size_t i = inputs.rows(); i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    if (j == i - 1) continue;
    for (std::size_t c = 0; c < inputs.cols(); ++c) {
      std::swap(inputs(i - 1, c), inputs(j, c));
    }
    for (std::size_t c = 0; c < targets.cols(); ++c) {
      std::swap(targets(i - 1, c), targets(j, c));
    }
  }
}

LabeledBatch take_rows(const LabeledBatch& batch, std::size_t begin, std::size_t count) {
  LabeledBatch out;
  out.inputs = Matrix(count, batch.inputs.cols());
  out.targets = Matrix(count, batch.targets.cols());
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t c = 0; c < batch.inputs.cols(); ++c) {
      out.inputs(i, c) = batch.inputs(begin + i, c);
    }
    for (std::size_t c = 0; c < batch.targets.cols(); ++c) {
      out.targets(i, c) = batch.targets(begin + i, c);
    }
  }
  return out;
}

}  // namespace

LabeledBatch build_link_batch(const SnapshotDelta& delta, const TemporalGraph& graph,
                              const EmbeddingTable& table, std::size_t batch_cap,
                              std::size_t negative_ratio, std::uint64_t seed) {
  if (batch_cap < 1) throw ConfigError("build_link_batch: B must be >= 1");
  const std::size_t dim = table.dimension();
  Rng rng(derive_seed(seed, 0x11be1, delta.snapshot_index));

  const std::size_t max_pos = std::max<std::size_t>(1, batch_cap / (1 + negative_ratio));
  std::vector<EdgeKey> positives = delta.added;
  for (std::size_t i = positives.size(); i > 1; --i) {
    std::swap(positives[i - 1], positives[rng.next_below(i)]);
  }
  if (positives.size() > max_pos) positives.resize(max_pos);

  LabeledBatch batch;
  if (positives.empty()) return batch;

  const std::size_t want_neg =
      std::min(batch_cap - positives.size(), positives.size() * negative_ratio);
  std::vector<EdgeKey> negatives;
  negatives.reserve(want_neg);
  const auto& nodes = graph.nodes();
  std::size_t attempts = 0;
  const std::size_t max_attempts = 100 * (want_neg + 1);
  while (negatives.size() < want_neg && attempts < max_attempts) {
    ++attempts;
    const NodeId u = nodes[rng.next_below(nodes.size())];
    const NodeId v = nodes[rng.next_below(nodes.size())];
    if (u == v || graph.has_edge(u, v)) continue;
    negatives.push_back(normalize_edge(u, v));
  }

  const std::size_t rows = positives.size() + negatives.size();
  batch.inputs = Matrix(rows, 2 * dim);
  batch.targets = Matrix(rows, 1);
  auto fill_row = [&](std::size_t row, const EdgeKey& e, double label) {
    const auto a = table.input_vector(e.a);
    const auto b = table.input_vector(e.b);
    for (std::size_t k = 0; k < dim; ++k) {
      batch.inputs(row, k) = a[k];
      batch.inputs(row, dim + k) = b[k];
    }
    batch.targets(row, 0) = label;
  };
  std::size_t row = 0;
  for (const auto& e : positives) fill_row(row++, e, 1.0);
  for (const auto& e : negatives) fill_row(row++, e, 0.0);
  shuffle_rows(batch.inputs, batch.targets, rng);
  return batch;
}

NodeBatchResult build_node_batch(const std::unordered_map<NodeId, std::size_t>& labels,
                                 const std::vector<NodeId>& affected, const EmbeddingTable& table,
                                 std::size_t batch_cap, std::size_t label_count,
                                 std::uint64_t seed) {
  if (batch_cap < 1 || label_count < 1) {
    throw ConfigError("build_node_batch: B and L must be >= 1");
  }
  NodeBatchResult result;
  Rng rng(derive_seed(seed, 0x20de1, 0));

  std::vector<NodeId> picked;
  for (NodeId v : affected) {
    if (picked.size() == batch_cap) break;
    if (!table.has_node(v)) continue;
    if (!labels.contains(v)) {
      ++result.missing_labels;
      continue;
    }
    picked.push_back(v);
  }

  if (picked.size() < batch_cap) {
    // Top up from the labeled population, deterministically.
    std::vector<NodeId> labeled;
    labeled.reserve(labels.size());
    for (const auto& [v, label] : labels) {
      if (table.has_node(v)) labeled.push_back(v);
    }
    std::sort(labeled.begin(), labeled.end());
    for (std::size_t i = labeled.size(); i > 1; --i) {
      std::swap(labeled[i - 1], labeled[rng.next_below(i)]);
    }
    for (NodeId v : labeled) {
      if (picked.size() == batch_cap) break;
      picked.push_back(v);
    }
  }

  const std::size_t dim = table.dimension();
  result.batch.inputs = Matrix(picked.size(), dim);
  result.batch.targets = Matrix(picked.size(), label_count);
  for (std::size_t i = 0; i < picked.size(); ++i) {
    const auto vec = table.input_vector(picked[i]);
    for (std::size_t k = 0; k < dim; ++k) result.batch.inputs(i, k) = vec[k];
    const std::size_t label = labels.at(picked[i]);
    if (label >= label_count) {
      throw ContractError("build_node_batch: label " + std::to_string(label) + " >= L");
    }
    result.batch.targets(i, label) = 1.0;
  }
  shuffle_rows(result.batch.inputs, result.batch.targets, rng);
  return result;
}

double evaluate(const FnnModel& model, const LabeledBatch& batch, Task task,
                const KernelPlan& plan) {
  if (batch.inputs.rows() == 0) throw ContractError("evaluate: empty batch");
  const ForwardTrace trace = forward(model, batch.inputs, plan);
  std::size_t correct = 0;
  const std::size_t rows = batch.inputs.rows();
  for (std::size_t i = 0; i < rows; ++i) {
    if (task == Task::LinkPrediction) {
      const double predicted = trace.readout(i, 0) >= 0.5 ? 1.0 : 0.0;
      correct += predicted == batch.targets(i, 0) ? 1 : 0;
    } else {
      std::size_t arg = 0;
      for (std::size_t j = 1; j < trace.readout.cols(); ++j) {
        if (trace.readout(i, j) > trace.readout(i, arg)) arg = j;
      }
      correct += batch.targets(i, arg) == 1.0 ? 1 : 0;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(rows);
}

std::unordered_map<NodeId, std::size_t> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file " + path);
  std::unordered_map<NodeId, std::size_t> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    NodeId v = 0;
    std::size_t label = 0;
    if (!(fields >> v >> label)) throw FormatError("bad label line: " + line);
    labels[v] = label;
  }
  return labels;
}

void gen_synthetic(const std::string& edge_path, std::size_t nodes, std::size_t communities,
                   double p_in, double p_out, std::size_t timestamps, std::uint64_t seed,
                   const std::string& label_path) {
  if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1) {
    throw ConfigError("gen_synthetic: probabilities must be in [0, 1]");
  }
  if (nodes < 2 || communities < 1 || timestamps < 1) {
    throw ConfigError("gen_synthetic: need nodes >= 2, communities >= 1, T >= 1");
  }

  auto community_of = [&](std::size_t v) { return v * communities / nodes; };
  Rng rng(derive_seed(seed, 0x5b3, nodes));

  struct TimedEdge {
    NodeId u;
    NodeId v;
    Timestamp t;
  };
  std::vector<TimedEdge> edges;
  for (std::size_t u = 0; u < nodes; ++u) {
    for (std::size_t v = u + 1; v < nodes; ++v) {
      const double p = community_of(u) == community_of(v) ? p_in : p_out;
      if (rng.next_double() < p) {
        edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v),
                         static_cast<Timestamp>(rng.next_below(timestamps))});
      }
    }
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const TimedEdge& a, const TimedEdge& b) { return a.t < b.t; });

  std::ofstream out(edge_path);
  if (!out) throw IoError("cannot write " + edge_path);
  for (const auto& e : edges) out << e.u << ' ' << e.v << ' ' << e.t << '\n';

  if (!label_path.empty()) {
    std::ofstream labels(label_path);
    if (!labels) throw IoError("cannot write " + label_path);
    for (std::size_t v = 0; v < nodes; ++v) labels << v << ' ' << community_of(v) << '\n';
  }
}

RunSummary run_pipeline(const PipelineConfig& config) {
  std::ifstream in(config.dataset_path);
  if (!in) throw IoError("cannot open dataset " + config.dataset_path);
  EdgeStreamParser parser(in);
  auto snapshots = bin_into_snapshots(read_all_events(parser), config.binning);

  std::unordered_map<NodeId, std::size_t> labels;
  if (config.task == Task::NodeClassification) {
    labels = load_labels(config.label_path);
  }

  const std::size_t input_dim =
      config.task == Task::LinkPrediction ? 2 * config.embedding_dim : config.embedding_dim;
  FnnModel model = init_model(input_dim, config.hidden_sizes, config.label_count,
                              config.fnn_learning_rate, derive_seed(config.seed, 0xf2, 0));

  std::vector<KernelTiming> kernel_rows;
  KernelPlan train_plan;
  train_plan.default_strategy = config.default_strategy;
  train_plan.overrides = config.strategy_overrides;
  train_plan.threads = config.threads;
  train_plan.timing_sink = &kernel_rows;
  KernelPlan eval_plan = train_plan;
  eval_plan.timing_sink = nullptr;

  TemporalGraph graph;
  std::optional<RTree> tree;
  std::optional<WalkCorpus> corpus;
  std::optional<EmbeddingTable> table;

  RunSummary summary;
  summary.snapshots = snapshots.size();
  double accuracy_sum = 0.0;

  for (const auto& snap : snapshots) {
    StageMetrics row;
    row.timestamp = snap.index;
    const SnapshotDelta delta = graph.apply_snapshot(snap);

    RepairReport repair;
    if (!tree) {
      auto start = Clock::now();
      tree.emplace(RTree::build(graph));
      row.construct_ns = ns_since(start);
      row.touched_leaves = tree->leaf_count();
      row.total_leaves = tree->leaf_count();

      start = Clock::now();
      corpus.emplace(graph, config.walks_per_node, config.walk_length,
                     derive_seed(config.seed, 0xa1c, 0));
      row.walk_repair_ns = ns_since(start);
      const auto walk_total = static_cast<WalkId>(corpus->walks().size());
      for (WalkId id = 0; id < walk_total; ++id) repair.touched.push_back(id);
      repair.walks_created = repair.touched.size();
      table.emplace(graph.nodes(), config.embedding_dim, derive_seed(config.seed, 0xe8b, 0));
    } else {
      auto start = Clock::now();
      const DirtyReport dirty = tree->update(delta);
      row.construct_ns = ns_since(start);
      row.touched_leaves = dirty.touched_leaves;
      row.total_leaves = dirty.total_leaves;

      start = Clock::now();
      repair = corpus->repair(graph, delta, snap.index, config.threads);
      row.walk_repair_ns = ns_since(start);
    }
    row.walks_updated = repair.walks_updated;
    row.walks_created = repair.walks_created;

    auto start = Clock::now();
    table->refresh(*corpus, repair, config.sgns, snap.index);
    row.word2vec_ns = ns_since(start);

    // Online causality: the table must have been refreshed exactly once per
    // snapshot seen so far, never ahead of the stream.
    if (table->version() != snap.index + 1) {
      throw ContractError("pipeline: embedding version " + std::to_string(table->version()) +
                          " out of step at timestamp " + std::to_string(snap.index));
    }

    start = Clock::now();
    LabeledBatch batch;
    if (config.task == Task::LinkPrediction) {
      batch = build_link_batch(delta, graph, *table, config.batch_cap, config.negative_ratio,
                               derive_seed(config.seed, 0xba7c4, snap.index));
    } else {
      batch = build_node_batch(labels, delta.affected, *table, config.batch_cap,
                               config.label_count,
                               derive_seed(config.seed, 0xba7c4, snap.index))
                  .batch;
    }
    row.batch_build_ns = ns_since(start);
    row.batch_rows = batch.inputs.rows();

    if (batch.inputs.rows() > 0) {
      const std::size_t rows = batch.inputs.rows();
      const std::size_t holdout =
          static_cast<std::size_t>(static_cast<double>(rows) * config.holdout_fraction);
      const std::size_t train_rows = rows - holdout;

      if (train_rows > 0) {
        const LabeledBatch train_batch = take_rows(batch, 0, train_rows);
        start = Clock::now();
        train_batch_online(model, train_batch, config.iterations_per_batch, config.task,
                           train_plan);
        row.train_ns = ns_since(start);
        ++summary.trained_steps;
      }
      if (holdout > 0) {
        const LabeledBatch eval_batch = take_rows(batch, train_rows, holdout);
        accuracy_sum += evaluate(model, eval_batch, config.task, eval_plan);
        ++summary.evaluated_steps;
      }
    }
    row.accuracy_so_far =
        summary.evaluated_steps ? accuracy_sum / static_cast<double>(summary.evaluated_steps) : 0.0;

    summary.total_construct_ns += row.construct_ns;
    summary.total_walk_ns += row.walk_repair_ns;
    summary.total_word2vec_ns += row.word2vec_ns;
    summary.total_batch_ns += row.batch_build_ns;
    summary.total_train_ns += row.train_ns;
    summary.per_timestamp.push_back(row);
  }

  summary.final_accuracy =
      summary.evaluated_steps ? accuracy_sum / static_cast<double>(summary.evaluated_steps) : 0.0;

  if (!config.walk_dump_path.empty()) {
    std::ofstream out(config.walk_dump_path);
    if (!out) throw IoError("cannot write " + config.walk_dump_path);
    corpus->dump(out);
  }
  if (!config.embedding_dump_path.empty()) {
    std::ofstream out(config.embedding_dump_path);
    if (!out) throw IoError("cannot write " + config.embedding_dump_path);
    table->dump(out);
  }
  if (!config.model_dump_path.empty()) {
    std::ofstream out(config.model_dump_path);
    if (!out) throw IoError("cannot write " + config.model_dump_path);
    dump_model(model, out);
  }

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    const auto dir = std::filesystem::path(config.output_dir);
    {
      std::ofstream out(dir / "stage_metrics.csv");
      write_stage_metrics_csv(summary.per_timestamp, out);
    }
    {
      std::ofstream out(dir / "kernel_timings.csv");
      write_kernel_timings_csv(kernel_rows, out);
    }
    {
      std::ofstream out(dir / "summary.txt");
      out << "snapshots " << summary.snapshots << '\n'
          << "trained_steps " << summary.trained_steps << '\n'
          << "evaluated_steps " << summary.evaluated_steps << '\n'
          << "final_accuracy " << summary.final_accuracy << '\n'
          << "construct_ns " << summary.total_construct_ns << '\n'
          << "walk_repair_ns " << summary.total_walk_ns << '\n'
          << "word2vec_ns " << summary.total_word2vec_ns << '\n'
          << "batch_build_ns " << summary.total_batch_ns << '\n'
          << "train_ns " << summary.total_train_ns << '\n';
    }
  }
  return summary;
}

void write_stage_metrics_csv(const std::vector<StageMetrics>& rows, std::ostream& out) {
  out << "timestamp,construct_ns,walk_repair_ns,word2vec_ns,batch_build_ns,train_ns,"
         "touched_leaves,total_leaves,walks_updated,walks_created,batch_rows,accuracy_so_far\n";
  for (const auto& r : rows) {
    out << r.timestamp << ',' << r.construct_ns << ',' << r.walk_repair_ns << ',' << r.word2vec_ns
        << ',' << r.batch_build_ns << ',' << r.train_ns << ',' << r.touched_leaves << ','
        << r.total_leaves << ',' << r.walks_updated << ',' << r.walks_created << ','
        << r.batch_rows << ',' << r.accuracy_so_far << '\n';
  }
}

void write_kernel_timings_csv(const std::vector<KernelTiming>& rows, std::ostream& out) {
  out << "label,strategy,threads,nanos\n";
  for (const auto& r : rows) {
    out << r.label << ',' << strategy_name(r.strategy) << ',' << r.threads << ',' << r.wall_ns
        << '\n';
  }
}

void apply_config_file(PipelineConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": expected key = value");
      }
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string{};
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": empty key or value");
    }

    if (key == "dataset") {
      config.dataset_path = value;
    } else if (key == "task") {
      if (value == "link") {
        config.task = Task::LinkPrediction;
      } else if (value == "node") {
        config.task = Task::NodeClassification;
      } else {
        throw ConfigError("task must be link|node, got " + value);
      }
    } else if (key == "labels") {
      config.label_path = value;
    } else if (key == "snapshots") {
      config.binning = BinningPolicy::fixed_count(std::stoull(value));
    } else if (key == "window") {
      config.binning = BinningPolicy::fixed_window(std::stoull(value));
    } else if (key == "batch_size") {
      config.batch_cap = std::stoull(value);
    } else if (key == "dim") {
      config.embedding_dim = std::stoull(value);
    } else if (key == "walks_per_node") {
      config.walks_per_node = std::stoull(value);
    } else if (key == "walk_length") {
      config.walk_length = std::stoull(value);
    } else if (key == "sgns_window") {
      config.sgns.window = std::stoull(value);
    } else if (key == "sgns_negatives") {
      config.sgns.negatives = std::stoull(value);
    } else if (key == "sgns_epochs") {
      config.sgns.epochs = std::stoull(value);
    } else if (key == "sgns_lr") {
      config.sgns.learning_rate = std::stod(value);
    } else if (key == "hidden") {
      config.hidden_sizes.clear();
      std::istringstream list(value);
      std::string item;
      while (std::getline(list, item, ',')) config.hidden_sizes.push_back(std::stoull(item));
    } else if (key == "labels_count") {
      config.label_count = std::stoull(value);
    } else if (key == "fnn_lr") {
      config.fnn_learning_rate = std::stod(value);
    } else if (key == "iterations") {
      config.iterations_per_batch = std::stoull(value);
    } else if (key == "neg_ratio") {
      config.negative_ratio = std::stoull(value);
    } else if (key == "strategy") {
      const auto split = value.find('=');
      if (split == std::string::npos) {
        config.default_strategy = strategy_from_name(value);
      } else {
        config.strategy_overrides[trim(value.substr(0, split))] =
            strategy_from_name(trim(value.substr(split + 1)));
      }
    } else if (key == "threads") {
      config.threads = std::stoi(value);
    } else if (key == "seed") {
      config.seed = std::stoull(value);
    } else if (key == "out_dir") {
      config.output_dir = value;
    } else if (key == "dump_walks") {
      config.walk_dump_path = value;
    } else if (key == "dump_embeddings") {
      config.embedding_dump_path = value;
    } else if (key == "dump_model") {
      config.model_dump_path = value;
    } else {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace tgl
