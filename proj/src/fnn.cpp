#include "tgl/fnn.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "tgl/error.hpp"
#include "tgl/rng.hpp"

namespace tgl {

namespace {

constexpr double kProbFloor = 1e-12;

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

Matrix dispatch(const KernelPlan& plan, const std::string& label, const Matrix& x,
                const Matrix& y) {
  auto [z, timing] = matmul_timed(x, y, plan.strategy_for(label), plan.threads, label);
  if (plan.timing_sink) plan.timing_sink->push_back(std::move(timing));
  return std::move(z);
}

void relu_inplace(Matrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.data()[i] < 0.0) m.data()[i] = 0.0;
  }
}

}  // namespace

FnnModel init_model(std::size_t input_dim, const std::vector<std::size_t>& hidden_sizes,
                    std::size_t label_count, double learning_rate, std::uint64_t seed) {
  if (input_dim < 1 || label_count < 1) throw ConfigError("init_model: sizes must be >= 1");
  for (std::size_t h : hidden_sizes) {
    if (h < 1) throw ConfigError("init_model: sizes must be >= 1");
  }

  FnnModel model;
  model.input_dim = input_dim;
  model.label_count = label_count;
  model.learning_rate = learning_rate;

  auto xavier = [&](std::size_t fan_in, std::size_t fan_out, std::uint64_t layer) {
    Matrix w(fan_in, fan_out);
    Rng rng(derive_seed(seed, layer, 0xfee));
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.next_double(-bound, bound);
    return w;
  };

  std::size_t prev = input_dim;
  for (std::size_t layer = 0; layer < hidden_sizes.size(); ++layer) {
    model.hidden_weights.push_back(xavier(prev, hidden_sizes[layer], layer));
    prev = hidden_sizes[layer];
  }
  model.readout_weight = xavier(prev, label_count, hidden_sizes.size());
  return model;
}

ForwardTrace forward(const FnnModel& model, const Matrix& inputs, const KernelPlan& plan) {
  if (inputs.cols() != model.input_dim) {
    throw ShapeError("forward: input " + inputs.shape_str() + " does not match model D_in " +
                     std::to_string(model.input_dim));
  }

  ForwardTrace trace;
  trace.input = inputs;
  const Matrix* prev = &trace.input;
  for (std::size_t i = 0; i < model.hidden_weights.size(); ++i) {
    Matrix y = dispatch(plan, "Y" + std::to_string(i + 1), *prev, model.hidden_weights[i]);
    relu_inplace(y);
    trace.activations.push_back(std::move(y));
    prev = &trace.activations.back();
  }

  trace.readout_pre = dispatch(plan, "R1", *prev, model.readout_weight);
  trace.readout = trace.readout_pre;
  if (model.label_count == 1) {
    for (std::size_t i = 0; i < trace.readout.size(); ++i) {
      const double x = trace.readout.data()[i];
      trace.readout.data()[i] = 1.0 / (1.0 + std::exp(-x));
    }
  } else {
    // Row-wise softmax, shifted by the row max.
    for (std::size_t i = 0; i < trace.readout.rows(); ++i) {
      double* row = trace.readout.row(i);
      double hi = row[0];
      for (std::size_t j = 1; j < trace.readout.cols(); ++j) hi = std::max(hi, row[j]);
      double sum = 0.0;
      for (std::size_t j = 0; j < trace.readout.cols(); ++j) {
        row[j] = std::exp(row[j] - hi);
        sum += row[j];
      }
      for (std::size_t j = 0; j < trace.readout.cols(); ++j) row[j] /= sum;
    }
  }
  return trace;
}

double loss(const ForwardTrace& trace, const Matrix& targets, Task task) {
  if (!trace.readout.same_shape(targets)) {
    throw ContractError("loss: targets " + targets.shape_str() + " vs readout " +
                        trace.readout.shape_str());
  }
  const std::size_t batch = targets.rows();
  double total = 0.0;
  if (task == Task::LinkPrediction) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const double y = targets.data()[i];
      if (y != 0.0 && y != 1.0) throw ContractError("loss: link targets must be 0/1");
      const double p = clamp_prob(trace.readout.data()[i]);
      total += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
  } else {
    for (std::size_t i = 0; i < targets.rows(); ++i) {
      double row_sum = 0.0;
      double picked = 0.0;
      for (std::size_t j = 0; j < targets.cols(); ++j) {
        const double t = targets(i, j);
        if (t != 0.0 && t != 1.0) throw ContractError("loss: node targets must be one-hot");
        row_sum += t;
        if (t == 1.0) picked = clamp_prob(trace.readout(i, j));
      }
      if (row_sum != 1.0) throw ContractError("loss: node target rows must be one-hot");
      total += -std::log(picked);
    }
  }
  return total / static_cast<double>(batch);
}

GradientSet backward(const FnnModel& model, const ForwardTrace& trace, const Matrix& targets,
                     const KernelPlan& plan) {
  const std::size_t layers = model.hidden_weights.size();
  if (trace.activations.size() != layers || !trace.readout.same_shape(targets)) {
    throw ContractError("backward: trace does not match model/targets");
  }

  GradientSet grads;
  grads.propagated.resize(layers);
  grads.weight_grads.resize(layers);

  // M_r^(1) = (R_2 - targets) / B, exact for sigmoid+BCE and softmax+CE.
  // Element-wise, so it never goes through the MM dispatcher.
  const auto batch = static_cast<double>(targets.rows());
  grads.readout_propagated = trace.readout;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    grads.readout_propagated.data()[i] =
        (grads.readout_propagated.data()[i] - targets.data()[i]) / batch;
  }

  const Matrix& last_hidden = layers ? trace.activations.back() : trace.input;
  grads.readout_weight_grad =
      dispatch(plan, "Mr2", transpose(last_hidden), grads.readout_propagated);

  const Matrix* downstream = &grads.readout_propagated;
  const Matrix* downstream_weight = &model.readout_weight;
  for (std::size_t i = layers; i-- > 0;) {
    const std::string tag = std::to_string(i + 1);
    Matrix m1 = dispatch(plan, "M" + tag + "_1", *downstream, transpose(*downstream_weight));
    // relu' mask: hidden pre-activation is positive exactly where the
    // stored activation is.
    const Matrix& act = trace.activations[i];
    for (std::size_t k = 0; k < m1.size(); ++k) {
      if (act.data()[k] <= 0.0) m1.data()[k] = 0.0;
    }
    grads.propagated[i] = std::move(m1);

    const Matrix& below = i == 0 ? trace.input : trace.activations[i - 1];
    grads.weight_grads[i] =
        dispatch(plan, "M" + tag + "_2", transpose(below), grads.propagated[i]);

    downstream = &grads.propagated[i];
    downstream_weight = &model.hidden_weights[i];
  }
  return grads;
}

void sgd_step(FnnModel& model, const GradientSet& grads) {
  auto apply = [&](Matrix& w, const Matrix& g) {
    if (!w.same_shape(g)) throw ContractError("sgd_step: gradient shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      w.data()[i] -= model.learning_rate * g.data()[i];
    }
  };
  for (std::size_t i = 0; i < model.hidden_weights.size(); ++i) {
    apply(model.hidden_weights[i], grads.weight_grads[i]);
  }
  apply(model.readout_weight, grads.readout_weight_grad);
}

IterStats train_batch_online(FnnModel& model, const LabeledBatch& batch, std::size_t iterations,
                             Task task, const KernelPlan& plan) {
  if (iterations < 1) throw ConfigError("train_batch_online: iterations must be >= 1");
  IterStats stats;
  stats.losses.reserve(iterations);
  for (std::size_t it = 0; it < iterations; ++it) {
    const ForwardTrace trace = forward(model, batch.inputs, plan);
    stats.losses.push_back(loss(trace, batch.targets, task));
    const GradientSet grads = backward(model, trace, batch.targets, plan);
    sgd_step(model, grads);
  }
  return stats;
}

void dump_model(const FnnModel& model, std::ostream& out) {
  auto dump_matrix = [&](const Matrix& w) {
    out << w.rows() << ' ' << w.cols() << '\n';
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) {
        if (j) out << ' ';
        out << w(i, j);
      }
      out << '\n';
    }
  };
  for (const auto& w : model.hidden_weights) dump_matrix(w);
  dump_matrix(model.readout_weight);
}

}  // namespace tgl
