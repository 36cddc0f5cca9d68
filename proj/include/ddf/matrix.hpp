#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ddf {

// Minimal dense row-major matrix. Enough linear algebra lives in the modules
// themselves; this only carries shape + storage.
template <typename T>
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

  T& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  T* row(std::size_t r) { return data.data() + r * cols; }
  const T* row(std::size_t r) const { return data.data() + r * cols; }

  bool same_shape(const Mat& other) const { return rows == other.rows && cols == other.cols; }
};

using Matrix = Mat<double>;
using CMatrix = Mat<std::complex<double>>;

}  // namespace ddf
