#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <thread>

#include "tgl/error.hpp"
#include "tgl/mm_kernels.hpp"
#include "tgl/rng.hpp"

using namespace tgl;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  Rng rng(seed);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.next_double(-1.0, 1.0);
  return m;
}

// Reference oracle local to the tests, written independently of the
// library's dispatch code.
Matrix oracle(const Matrix& x, const Matrix& y) {
  Matrix z(x.rows(), y.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) acc += x(i, k) * y(k, j);
      z(i, j) = acc;
    }
  }
  return z;
}

const std::vector<MMStrategy> kAllStrategies = {MMStrategy::Inner, MMStrategy::Outer,
                                                MMStrategy::RowWise, MMStrategy::ColumnWise};

}  // namespace

TEST_CASE("identity times random equals random, all strategies") {
  const Matrix x = Matrix::identity(3);
  const Matrix y = random_matrix(3, 4, 11);
  for (MMStrategy s : kAllStrategies) {
    for (int threads : {1, 2, 7}) {
      const Matrix z = matmul(x, y, s, threads);
      CHECK(max_abs_diff(z, y) == 0.0);
    }
  }
}

TEST_CASE("hand-expanded 2x2 product") {
  Matrix x(2, 2);
  x(0, 0) = 1;
  x(0, 1) = 2;
  x(1, 0) = 3;
  x(1, 1) = 4;
  Matrix y(2, 2);
  y(0, 0) = 5;
  y(0, 1) = 6;
  y(1, 0) = 7;
  y(1, 1) = 8;
  for (MMStrategy s : kAllStrategies) {
    const Matrix z = matmul(x, y, s, 2);
    CHECK(z(0, 0) == 19.0);
    CHECK(z(0, 1) == 22.0);
    CHECK(z(1, 0) == 43.0);
    CHECK(z(1, 1) == 50.0);
  }
}

TEST_CASE("table shapes match the sequential oracle") {
  // The benchmarked training kernels plus the literal (128,1) readout row.
  struct Shape {
    std::size_t m, k, n;
  };
  const std::vector<Shape> shapes = {
      {1024, 16, 128}, {1024, 128, 1}, {128, 1024, 1}, {1024, 1, 128}, {16, 1024, 128},
      {512, 64, 256},  {512, 256, 128}, {512, 128, 1},  {512, 128, 10}, {128, 512, 10},
      {512, 10, 128},  {256, 512, 128}, {512, 128, 256}, {64, 512, 256},
  };
  std::uint64_t seed = 100;
  for (const auto& shape : shapes) {
    const Matrix x = random_matrix(shape.m, shape.k, ++seed);
    const Matrix y = random_matrix(shape.k, shape.n, ++seed);
    const Matrix expected = oracle(x, y);
    for (MMStrategy s : kAllStrategies) {
      for (int threads : {1, 4, 8}) {
        const Matrix z = matmul(x, y, s, threads);
        const double diff = max_abs_diff(z, expected);
        if (s == MMStrategy::Outer) {
          CHECK(diff <= 1e-9);
        } else {
          CHECK(diff == 0.0);
        }
      }
    }
  }
}

TEST_CASE("results do not depend on thread count") {
  const Matrix x = random_matrix(67, 31, 5);
  const Matrix y = random_matrix(31, 45, 6);
  for (MMStrategy s : kAllStrategies) {
    const Matrix base = matmul(x, y, s, 1);
    for (int threads : {2, 3, 8, 64}) {
      const Matrix z = matmul(x, y, s, threads);
      if (s == MMStrategy::Outer) {
        CHECK(max_abs_diff(z, base) <= 1e-9);
      } else {
        CHECK(max_abs_diff(z, base) == 0.0);
      }
    }
  }
}

TEST_CASE("outer at one thread is bitwise the oracle; reruns reproduce") {
  const Matrix x = random_matrix(40, 23, 9);
  const Matrix y = random_matrix(23, 17, 10);
  CHECK(max_abs_diff(matmul(x, y, MMStrategy::Outer, 1), oracle(x, y)) == 0.0);
  const Matrix a = matmul(x, y, MMStrategy::Outer, 5);
  const Matrix b = matmul(x, y, MMStrategy::Outer, 5);
  CHECK(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("outer atomic mode stays within oracle tolerance") {
  const Matrix x = random_matrix(33, 29, 12);
  const Matrix y = random_matrix(29, 21, 13);
  const Matrix expected = oracle(x, y);
  for (int threads : {1, 4}) {
    CHECK(max_abs_diff(matmul_outer_atomic(x, y, threads), expected) <= 1e-9);
  }
}

TEST_CASE("thread counts above the partitionable dimension degrade gracefully") {
  // k = 1: Outer has a single partition regardless of threads.
  const Matrix x = random_matrix(1024, 1, 20);
  const Matrix y = random_matrix(1, 128, 21);
  const Matrix expected = oracle(x, y);
  for (MMStrategy s : kAllStrategies) {
    CHECK(max_abs_diff(matmul(x, y, s, 8), expected) <= 1e-9);
  }
  // 2 columns, 8 threads for the column partitioner
  const Matrix x2 = random_matrix(5, 3, 22);
  const Matrix y2 = random_matrix(3, 2, 23);
  CHECK(max_abs_diff(matmul(x2, y2, MMStrategy::ColumnWise, 8), oracle(x2, y2)) == 0.0);
}

TEST_CASE("dimension mismatch raises a shape error naming both shapes") {
  const Matrix x(3, 4);
  const Matrix y(5, 2);
  CHECK_THROWS_AS(matmul(x, y, MMStrategy::Inner, 1), ShapeError);
  try {
    matmul(x, y, MMStrategy::Inner, 1);
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    CHECK(what.find("(3, 4)") != std::string::npos);
    CHECK(what.find("(5, 2)") != std::string::npos);
  }
}

TEST_CASE("timed call echoes the requested thread count and label") {
  const Matrix x = random_matrix(16, 8, 30);
  const Matrix y = random_matrix(8, 4, 31);
  const auto [z, timing] = matmul_timed(x, y, MMStrategy::RowWise, 8, "Y1");
  CHECK(timing.threads == 8);
  CHECK(timing.label == "Y1");
  CHECK(timing.wall_ns >= 0);
  CHECK(max_abs_diff(z, oracle(x, y)) == 0.0);
}

TEST_CASE("parallel run is no slower than serial on a big kernel when cores exist") {
  if (std::thread::hardware_concurrency() < 8) return;  // machine-dependent ordering
  const Matrix x = random_matrix(512, 64, 40);
  const Matrix y = random_matrix(64, 256, 41);
  std::int64_t serial = 0;
  std::int64_t parallel = 0;
  for (int rep = 0; rep < 5; ++rep) {
    serial += matmul_timed(x, y, MMStrategy::RowWise, 1, "b").second.wall_ns;
    parallel += matmul_timed(x, y, MMStrategy::RowWise, 8, "b").second.wall_ns;
  }
  CHECK(parallel < serial);
}

TEST_CASE("transpose") {
  Matrix x(2, 2);
  x(0, 0) = 1;
  x(0, 1) = 2;
  x(1, 0) = 3;
  x(1, 1) = 4;
  const Matrix t = transpose(x);
  CHECK(t(0, 0) == 1.0);
  CHECK(t(0, 1) == 3.0);
  CHECK(t(1, 0) == 2.0);
  CHECK(t(1, 1) == 4.0);

  const Matrix one = random_matrix(1, 1, 50);
  CHECK(max_abs_diff(transpose(one), one) == 0.0);

  const Matrix r = random_matrix(7, 3, 51);
  CHECK(max_abs_diff(transpose(transpose(r)), r) == 0.0);
}

TEST_CASE("strategy names round-trip") {
  for (MMStrategy s : kAllStrategies) {
    CHECK(strategy_from_name(strategy_name(s)) == s);
  }
  CHECK(strategy_from_name("row-wise") == MMStrategy::RowWise);
  CHECK(strategy_from_name("COLUMN-WISE") == MMStrategy::ColumnWise);
  CHECK_THROWS_AS(strategy_from_name("diagonal"), ConfigError);
}
