#include "tgl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <unordered_map>

#include "tgl/error.hpp"
#include "tgl/rng.hpp"

namespace tgl {

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.next_double(-1.0, 1.0);
  return m;
}

std::int64_t median(std::vector<std::int64_t> samples) {
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

std::vector<MMShape> link_kernel_shapes(std::size_t batch) {
  return {
      {"Y1", batch, 16, 128},   // X x W_1
      {"R1", batch, 128, 1},    // Y_1 x W_r
      {"Mr2", 128, batch, 1},   // Y_1^T x M_r^(1)
      {"M1_1", batch, 1, 128},  // M_r^(1) x W_r^T
      {"M1_2", 16, batch, 128}, // X^T x M_1^(1)
  };
}

std::vector<MMShape> node_kernel_shapes(std::size_t batch) {
  return {
      {"Y1", batch, 64, 256},
      {"Y2", batch, 256, 128},
      {"R1", batch, 128, 10},
      {"Mr2", 128, batch, 10},
      {"M2_1", batch, 10, 128},
      {"M2_2", 256, batch, 128},
      {"M1_1", batch, 128, 256},
      {"M1_2", 64, batch, 256},
  };
}

std::vector<MMBenchRow> bench_mm(const std::vector<MMShape>& shapes,
                                 const std::vector<MMStrategy>& strategies,
                                 const std::vector<int>& thread_list, std::size_t reps,
                                 std::uint64_t seed, bool outer_atomic) {
  if (reps < 1) throw ConfigError("bench_mm: reps must be >= 1");
  if (std::find(thread_list.begin(), thread_list.end(), 1) == thread_list.end()) {
    throw ConfigError("bench_mm: thread list must include 1 for normalization");
  }

  std::vector<MMBenchRow> rows;
  std::unordered_map<std::string, std::int64_t> baseline;  // RowWise @ 1 thread

  for (const auto& shape : shapes) {
    Rng rng(derive_seed(seed, std::hash<std::string>{}(shape.label), shape.m));
    const Matrix x = random_matrix(shape.m, shape.k, rng);
    const Matrix y = random_matrix(shape.k, shape.n, rng);

    // Baseline first so the speedup column can be filled in immediately.
    {
      std::vector<std::int64_t> samples;
      for (std::size_t r = 0; r < reps; ++r) {
        samples.push_back(matmul_timed(x, y, MMStrategy::RowWise, 1, shape.label).second.wall_ns);
      }
      baseline[shape.label] = std::max<std::int64_t>(1, median(samples));
    }

    for (MMStrategy s : strategies) {
      for (int threads : thread_list) {
        MMBenchRow row;
        row.label = shape.label;
        row.strategy = s;
        row.threads = threads;
        if (s == MMStrategy::RowWise && threads == 1) {
          // the normalization point itself: speedup 1.0 by construction
          row.median_ns = baseline[shape.label];
          row.speedup = 1.0;
          rows.push_back(std::move(row));
          continue;
        }
        std::vector<std::int64_t> samples;
        for (std::size_t r = 0; r < reps; ++r) {
          if (s == MMStrategy::Outer && outer_atomic) {
            const auto start = std::chrono::steady_clock::now();
            matmul_outer_atomic(x, y, threads);
            samples.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                  std::chrono::steady_clock::now() - start)
                                  .count());
          } else {
            samples.push_back(matmul_timed(x, y, s, threads, shape.label).second.wall_ns);
          }
        }
        row.median_ns = median(samples);
        row.speedup = static_cast<double>(baseline[shape.label]) /
                      static_cast<double>(std::max<std::int64_t>(1, row.median_ns));
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<FnnBenchRow> bench_fnn(Task task, const std::vector<MMStrategy>& strategies,
                                   const std::vector<int>& thread_list, std::size_t batch,
                                   std::size_t reps, std::uint64_t seed) {
  if (reps < 1) throw ConfigError("bench_fnn: reps must be >= 1");

  const bool link = task == Task::LinkPrediction;
  const std::size_t input_dim = link ? 16 : 64;
  const std::vector<std::size_t> hidden = link ? std::vector<std::size_t>{128}
                                               : std::vector<std::size_t>{256, 128};
  const std::size_t label_count = link ? 1 : 10;

  Rng rng(derive_seed(seed, 0xbe4c4, batch));
  LabeledBatch data;
  data.inputs = random_matrix(batch, input_dim, rng);
  data.targets = Matrix(batch, label_count);
  for (std::size_t i = 0; i < batch; ++i) {
    if (link) {
      data.targets(i, 0) = static_cast<double>(rng.next_below(2));
    } else {
      data.targets(i, rng.next_below(label_count)) = 1.0;
    }
  }

  std::vector<FnnBenchRow> rows;
  std::unordered_map<std::string, std::int64_t> baseline;

  auto run_one = [&](MMStrategy s, int threads) {
    // Median per kernel over reps; each rep trains a fresh model so the
    // numeric work is identical across strategies and thread counts.
    std::unordered_map<std::string, std::vector<std::int64_t>> kernel_samples;
    std::vector<std::int64_t> others_samples;
    for (std::size_t r = 0; r < reps; ++r) {
      FnnModel model =
          init_model(input_dim, hidden, label_count, 0.05, derive_seed(seed, 0xf2, 0));
      std::vector<KernelTiming> sink;
      KernelPlan plan;
      plan.default_strategy = s;
      plan.threads = threads;
      plan.timing_sink = &sink;

      const auto start = std::chrono::steady_clock::now();
      train_batch_online(model, data, 1, task, plan);
      const auto total_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                                std::chrono::steady_clock::now() - start)
                                .count();
      std::int64_t kernels_ns = 0;
      for (const auto& t : sink) {
        kernel_samples[t.label].push_back(t.wall_ns);
        kernels_ns += t.wall_ns;
      }
      others_samples.push_back(std::max<std::int64_t>(0, total_ns - kernels_ns));
    }
    std::vector<FnnBenchRow> batch_rows;
    for (auto& [label, samples] : kernel_samples) {
      batch_rows.push_back({label, s, threads, median(samples), 0.0});
    }
    std::sort(batch_rows.begin(), batch_rows.end(),
              [](const FnnBenchRow& a, const FnnBenchRow& b) { return a.label < b.label; });
    batch_rows.push_back({"Others", s, threads, median(others_samples), 0.0});
    return batch_rows;
  };

  // RowWise at 1 thread first: it is the normalization baseline.
  const auto baseline_rows = run_one(MMStrategy::RowWise, 1);
  for (const auto& row : baseline_rows) {
    baseline[row.label] = std::max<std::int64_t>(1, row.median_ns);
  }

  for (MMStrategy s : strategies) {
    for (int threads : thread_list) {
      // the baseline point is reported from its own samples, normalized 1.0
      auto batch_rows = (s == MMStrategy::RowWise && threads == 1) ? baseline_rows
                                                                   : run_one(s, threads);
      for (auto& row : batch_rows) {
        row.normalized = static_cast<double>(row.median_ns) /
                         static_cast<double>(baseline.at(row.label));
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_mm_bench_csv(const std::vector<MMBenchRow>& rows, std::ostream& out) {
  out << "kernel,strategy,threads,median_ns,speedup\n";
  for (const auto& r : rows) {
    out << r.label << ',' << strategy_name(r.strategy) << ',' << r.threads << ',' << r.median_ns
        << ',' << r.speedup << '\n';
  }
}

void write_fnn_bench_csv(const std::vector<FnnBenchRow>& rows, std::ostream& out) {
  out << "kernel,strategy,threads,median_ns,normalized\n";
  for (const auto& r : rows) {
    out << r.label << ',' << strategy_name(r.strategy) << ',' << r.threads << ',' << r.median_ns
        << ',' << r.normalized << '\n';
  }
}

}  // namespace tgl
