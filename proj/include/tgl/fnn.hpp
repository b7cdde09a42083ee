#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgl/matrix.hpp"
#include "tgl/mm_kernels.hpp"

namespace tgl {

enum class Task { LinkPrediction, NodeClassification };

// Per-kernel strategy selection. Kernel labels follow the training
// decomposition: Y1..Yn, R1 forward; Mr2, Mi_1, Mi_2 backward.
struct KernelPlan {
  MMStrategy default_strategy = MMStrategy::RowWise;
  std::unordered_map<std::string, MMStrategy> overrides;
  int threads = 1;
  std::vector<KernelTiming>* timing_sink = nullptr;  // optional

  MMStrategy strategy_for(const std::string& label) const {
    auto it = overrides.find(label);
    return it == overrides.end() ? default_strategy : it->second;
  }
};

// N-hidden-layer feed-forward network: hidden Y_i = relu(Y_{i-1} * W_i),
// readout R_1 = Y_n * W_r, R_2 = sigmoid (L = 1) or row softmax (L > 1).
struct FnnModel {
  std::vector<Matrix> hidden_weights;  // W_1..W_n
  Matrix readout_weight;               // W_r
  std::size_t input_dim = 0;
  std::size_t label_count = 0;
  double learning_rate = 0.05;
};

struct ForwardTrace {
  Matrix input;                     // B x D_in
  std::vector<Matrix> activations;  // Y_1..Y_n, post-relu
  Matrix readout_pre;               // R_1, B x L
  Matrix readout;                   // R_2, B x L
};

struct GradientSet {
  std::vector<Matrix> propagated;       // M_i^(1), B x H_i
  std::vector<Matrix> weight_grads;     // M_i^(2), shape of W_i
  Matrix readout_propagated;            // M_r^(1), B x L
  Matrix readout_weight_grad;           // M_r^(2), shape of W_r
};

struct LabeledBatch {
  Matrix inputs;   // B x D_in
  Matrix targets;  // B x L; {0,1} for link, one-hot rows for node task
};

struct IterStats {
  std::vector<double> losses;  // one per iteration
};

// Xavier-uniform weights, deterministic per seed.
FnnModel init_model(std::size_t input_dim, const std::vector<std::size_t>& hidden_sizes,
                    std::size_t label_count, double learning_rate, std::uint64_t seed);

ForwardTrace forward(const FnnModel& model, const Matrix& inputs, const KernelPlan& plan);

double loss(const ForwardTrace& trace, const Matrix& targets, Task task);

GradientSet backward(const FnnModel& model, const ForwardTrace& trace, const Matrix& targets,
                     const KernelPlan& plan);

void sgd_step(FnnModel& model, const GradientSet& grads);

// K consecutive forward/loss/backward/step passes over the same batch.
IterStats train_batch_online(FnnModel& model, const LabeledBatch& batch, std::size_t iterations,
                             Task task, const KernelPlan& plan);

// Plain-text checkpoint: `rows cols` header then row-major values, one
// weight matrix after another (W_1..W_n, W_r).
void dump_model(const FnnModel& model, std::ostream& out);

}  // namespace tgl
