#include "rmeta/tensor.hpp"

#include <string>

namespace rmeta::ad {

std::string Tensor::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

void matmul(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::int32_t m = a.rows, k = a.cols, n = b.cols;
  out.assign_shape(m, n);
  out.fill(0.0);
  const double* ad = a.data.data();
  const double* bd = b.data.data();
  double* od = out.data.data();
  for (std::int32_t i = 0; i < m; ++i) {
    const double* arow = ad + static_cast<std::size_t>(i) * k;
    double* orow = od + static_cast<std::size_t>(i) * n;
    for (std::int32_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = bd + static_cast<std::size_t>(p) * n;
      for (std::int32_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

void matmul_acc_abt(const Tensor& a, const Tensor& b, Tensor& out) {
  // out(i,j) += sum_k a(i,k) * b(j,k); rows of both operands are contiguous.
  const std::int32_t m = a.rows, k = a.cols, n = b.rows;
  const double* ad = a.data.data();
  const double* bd = b.data.data();
  double* od = out.data.data();
  for (std::int32_t i = 0; i < m; ++i) {
    const double* arow = ad + static_cast<std::size_t>(i) * k;
    double* orow = od + static_cast<std::size_t>(i) * n;
    for (std::int32_t j = 0; j < n; ++j) {
      const double* brow = bd + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (std::int32_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      orow[j] += acc;
    }
  }
}

void matmul_acc_atb(const Tensor& a, const Tensor& b, Tensor& out) {
  // out(i,j) += sum_k a(k,i) * b(k,j); axpy over rows keeps unit stride.
  const std::int32_t k = a.rows, m = a.cols, n = b.cols;
  const double* ad = a.data.data();
  const double* bd = b.data.data();
  double* od = out.data.data();
  for (std::int32_t p = 0; p < k; ++p) {
    const double* arow = ad + static_cast<std::size_t>(p) * m;
    const double* brow = bd + static_cast<std::size_t>(p) * n;
    for (std::int32_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* orow = od + static_cast<std::size_t>(i) * n;
      for (std::int32_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace rmeta::ad
