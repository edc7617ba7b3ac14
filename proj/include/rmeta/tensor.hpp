#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rmeta::ad {

// Dense row-major matrix of doubles. Vectors are n x 1 (or 1 x n), scalars
// are 1 x 1. This is the value type stored on tape nodes; it deliberately
// keeps its backing vector alive across reshapes so tapes can be reused
// without reallocating.
struct Tensor {
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::int32_t r, std::int32_t c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }
  static Tensor column(std::vector<double> v) {
    Tensor t;
    t.rows = static_cast<std::int32_t>(v.size());
    t.cols = 1;
    t.data = std::move(v);
    return t;
  }
  static Tensor row(std::vector<double> v) {
    Tensor t;
    t.rows = 1;
    t.cols = static_cast<std::int32_t>(v.size());
    t.data = std::move(v);
    return t;
  }
  static Tensor ones(std::int32_t r, std::int32_t c) {
    Tensor t(r, c);
    for (double& x : t.data) x = 1.0;
    return t;
  }

  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  bool is_vector() const { return rows == 1 || cols == 1; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  double& at(std::int32_t r, std::int32_t c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(std::int32_t r, std::int32_t c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  // Reshape in place without preserving contents; keeps capacity.
  void assign_shape(std::int32_t r, std::int32_t c) {
    rows = r;
    cols = c;
    data.resize(static_cast<std::size_t>(r) * c);
  }
  void fill(double v) {
    for (double& x : data) x = v;
  }

  std::string shape_str() const;
};

// out = a * b (matrix product). Shapes must already agree.
void matmul(const Tensor& a, const Tensor& b, Tensor& out);
// out += a * b^T
void matmul_acc_abt(const Tensor& a, const Tensor& b, Tensor& out);
// out += a^T * b
void matmul_acc_atb(const Tensor& a, const Tensor& b, Tensor& out);

}  // namespace rmeta::ad
