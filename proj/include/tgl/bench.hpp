#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tgl/fnn.hpp"
#include "tgl/mm_kernels.hpp"

namespace tgl {

struct MMShape {
  std::string label;
  std::size_t m = 0;  // rows of X
  std::size_t k = 0;  // cols of X / rows of Y
  std::size_t n = 0;  // cols of Y
};

// The training-kernel shapes of the two reference configurations,
// parameterized by batch size (link: D=8, H=128, L=1; node: D=64,
// H=(256,128), L=10).
std::vector<MMShape> link_kernel_shapes(std::size_t batch = 1024);
std::vector<MMShape> node_kernel_shapes(std::size_t batch = 512);

struct MMBenchRow {
  std::string label;
  MMStrategy strategy;
  int threads = 1;
  std::int64_t median_ns = 0;
  double speedup = 0.0;  // vs RowWise at 1 thread, same kernel
};

// Median-of-reps wall time per (kernel, strategy, threads). The thread list
// must include 1 so the normalization baseline exists. With outer_atomic
// set, Outer runs the atomic-update variant instead of private buffers.
std::vector<MMBenchRow> bench_mm(const std::vector<MMShape>& shapes,
                                 const std::vector<MMStrategy>& strategies,
                                 const std::vector<int>& thread_list, std::size_t reps,
                                 std::uint64_t seed, bool outer_atomic = false);

struct FnnBenchRow {
  std::string label;  // kernel label or "Others"
  MMStrategy strategy;
  int threads = 1;
  std::int64_t median_ns = 0;
  double normalized = 0.0;  // vs same kernel, RowWise at 1 thread
};

// One full training iteration (forward, loss, backward, step) per
// (strategy, threads); per-kernel medians over reps plus an "Others" bucket
// for everything that is not a matrix multiplication.
std::vector<FnnBenchRow> bench_fnn(Task task, const std::vector<MMStrategy>& strategies,
                                   const std::vector<int>& thread_list, std::size_t batch,
                                   std::size_t reps, std::uint64_t seed);

void write_mm_bench_csv(const std::vector<MMBenchRow>& rows, std::ostream& out);
void write_fnn_bench_csv(const std::vector<FnnBenchRow>& rows, std::ostream& out);

}  // namespace tgl
