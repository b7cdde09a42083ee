#include "tgl/matrix.hpp"

#include <cmath>
#include <cstdlib>

#include "tgl/error.hpp"

namespace tgl {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Matrix::shape_str() const {
  return "(" + std::to_string(rows_) + ", " + std::to_string(cols_) + ")";
}

Matrix transpose(const Matrix& x) {
  Matrix t(x.cols(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      t(j, i) = x(i, j);
    }
  }
  return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("max_abs_diff: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

}  // namespace tgl
