#include "milnet/kernels.h"

namespace milnet::kernels::reference {

void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

void matmul_nt_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
      c[i * n + j] += s;
    }
  }
}

void matmul_tn_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = c[i * n + j];
      for (int p = 0; p < k; ++p) s += a[p * m + i] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

void segment_max(std::span<const double> x, int stride, int cols,
                 std::span<const int> valid, std::span<double> out,
                 std::span<int> arg) {
  for (size_t s = 0; s < valid.size(); ++s) {
    int v = valid[s] < stride ? valid[s] : stride;
    for (int j = 0; j < cols; ++j) {
      double best = 0.0;
      int where = -1;
      for (int t = 0; t < v; ++t) {
        double e = x[(s * stride + t) * cols + j];
        if (where < 0 || e > best) {
          best = e;
          where = t;
        }
      }
      out[s * cols + j] = best;
      arg[s * cols + j] = where;
    }
  }
}

}  // namespace milnet::kernels::reference
