#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgl/fnn.hpp"
#include "tgl/graph_stream.hpp"
#include "tgl/sgns.hpp"

namespace tgl {

struct PipelineConfig {
  std::string dataset_path;
  Task task = Task::LinkPrediction;
  std::string label_path;  // node classification only
  BinningPolicy binning = BinningPolicy::fixed_count(50);
  std::size_t batch_cap = 1024;      // B
  std::size_t embedding_dim = 8;     // d
  std::size_t walks_per_node = 10;   // r
  std::size_t walk_length = 20;      // l
  SgnsHyper sgns;
  std::vector<std::size_t> hidden_sizes = {128};
  std::size_t label_count = 1;  // L
  double fnn_learning_rate = 0.05;
  std::size_t iterations_per_batch = 10;  // K
  std::size_t negative_ratio = 1;         // negatives per positive edge
  double holdout_fraction = 0.2;
  MMStrategy default_strategy = MMStrategy::RowWise;
  std::unordered_map<std::string, MMStrategy> strategy_overrides;
  int threads = 1;
  std::uint64_t seed = 42;
  std::string output_dir;  // empty: keep results in memory only
  std::string walk_dump_path;       // final walk corpus, one walk per line
  std::string embedding_dump_path;  // final input vectors, `node v_1 ... v_d`
  std::string model_dump_path;      // final weights, shape-prefixed
};

struct StageMetrics {
  std::size_t timestamp = 0;
  std::int64_t construct_ns = 0;
  std::int64_t walk_repair_ns = 0;
  std::int64_t word2vec_ns = 0;
  std::int64_t batch_build_ns = 0;
  std::int64_t train_ns = 0;
  std::size_t touched_leaves = 0;
  std::size_t total_leaves = 0;
  std::size_t walks_updated = 0;
  std::size_t walks_created = 0;
  std::size_t batch_rows = 0;
  double accuracy_so_far = 0.0;
};

struct RunSummary {
  double final_accuracy = 0.0;
  std::size_t evaluated_steps = 0;
  std::size_t trained_steps = 0;
  std::size_t snapshots = 0;
  std::int64_t total_construct_ns = 0;
  std::int64_t total_walk_ns = 0;
  std::int64_t total_word2vec_ns = 0;
  std::int64_t total_batch_ns = 0;
  std::int64_t total_train_ns = 0;
  std::vector<StageMetrics> per_timestamp;
};

// Positive rows are concatenated endpoint embeddings of edges added in this
// delta (capped so positives + ratio*positives fit in B); negatives are
// uniformly sampled node pairs verified absent from the active edge set.
// Rows come out deterministically shuffled. Zero positives yields an empty
// batch, the signal to skip training for the step.
LabeledBatch build_link_batch(const SnapshotDelta& delta, const TemporalGraph& graph,
                              const EmbeddingTable& table, std::size_t batch_cap,
                              std::size_t negative_ratio, std::uint64_t seed);

struct NodeBatchResult {
  LabeledBatch batch;
  std::size_t missing_labels = 0;
};

// Rows are embeddings of up to B affected nodes with known labels, topped
// up with randomly drawn labeled nodes; targets are one-hot length L.
NodeBatchResult build_node_batch(const std::unordered_map<NodeId, std::size_t>& labels,
                                 const std::vector<NodeId>& affected, const EmbeddingTable& table,
                                 std::size_t batch_cap, std::size_t label_count,
                                 std::uint64_t seed);

// Link: prediction = readout >= 0.5. Node: row argmax, ties to the lowest
// index. Returns correct / total.
double evaluate(const FnnModel& model, const LabeledBatch& batch, Task task,
                const KernelPlan& plan);

// `node_id label` per line.
std::unordered_map<NodeId, std::size_t> load_labels(const std::string& path);

// Stochastic-block-model temporal edge list: communities are contiguous id
// blocks, arrival times uniform over [0, T). Optionally writes node labels
// (community index). Deterministic per seed.
void gen_synthetic(const std::string& edge_path, std::size_t nodes, std::size_t communities,
                   double p_in, double p_out, std::size_t timestamps, std::uint64_t seed,
                   const std::string& label_path = "");

// Full per-timestamp loop: apply snapshot, update index, repair walks,
// refresh embeddings, build batch, train K iterations, evaluate holdout.
// Writes stage_metrics.csv, kernel_timings.csv and summary.txt into
// config.output_dir when set.
RunSummary run_pipeline(const PipelineConfig& config);

void write_stage_metrics_csv(const std::vector<StageMetrics>& rows, std::ostream& out);
void write_kernel_timings_csv(const std::vector<KernelTiming>& rows, std::ostream& out);

// Flat key = value config file; '#' starts a comment. Unknown keys raise
// ConfigError.
void apply_config_file(PipelineConfig& config, const std::string& path);

}  // namespace tgl
