#include "milnet/kernels.h"

#include <omp.h>

#include <algorithm>

namespace milnet::kernels {
namespace {

// Below this many multiply-adds the fork/join cost dominates.
constexpr long kParallelWork = 1L << 15;

bool worth_parallel(long m, long k, long n) { return m * k * n >= kParallelWork; }

}  // namespace

void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> c, int m, int k, int n) {
  const double *pa = a.data();
  const double *pb = b.data();
  double *pc = c.data();
#pragma omp parallel for schedule(static) if (worth_parallel(m, k, n))
  for (int i = 0; i < m; ++i) {
    double *row = pc + static_cast<long>(i) * n;
    std::fill(row, row + n, 0.0);
    const double *ar = pa + static_cast<long>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = ar[p];
      const double *br = pb + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) row[j] += av * br[j];
    }
  }
}

void matmul_nt_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int m, int k, int n) {
  const double *pa = a.data();
  const double *pb = b.data();
  double *pc = c.data();
#pragma omp parallel for schedule(static) if (worth_parallel(m, k, n))
  for (int i = 0; i < m; ++i) {
    const double *ar = pa + static_cast<long>(i) * k;
    double *row = pc + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double *br = pb + static_cast<long>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ar[p] * br[p];
      row[j] += s;
    }
  }
}

void matmul_tn_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int m, int k, int n) {
  const double *pa = a.data();
  const double *pb = b.data();
  double *pc = c.data();
  // Partition output rows; each row reduces over p in ascending order.
#pragma omp parallel for schedule(static) if (worth_parallel(m, k, n))
  for (int i = 0; i < m; ++i) {
    double *row = pc + static_cast<long>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = pa[static_cast<long>(p) * m + i];
      const double *br = pb + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) row[j] += av * br[j];
    }
  }
}

void segment_max(std::span<const double> x, int stride, int cols,
                 std::span<const int> valid, std::span<double> out,
                 std::span<int> arg) {
  const int segments = static_cast<int>(valid.size());
#pragma omp parallel for schedule(static) if (worth_parallel(segments, stride, cols))
  for (int s = 0; s < segments; ++s) {
    double *o = out.data() + static_cast<long>(s) * cols;
    int *g = arg.data() + static_cast<long>(s) * cols;
    const int v = std::min(valid[s], stride);
    if (v <= 0) {
      std::fill(o, o + cols, 0.0);
      std::fill(g, g + cols, -1);
      continue;
    }
    const double *base = x.data() + static_cast<long>(s) * stride * cols;
    std::copy(base, base + cols, o);
    std::fill(g, g + cols, 0);
    for (int t = 1; t < v; ++t) {
      const double *r = base + static_cast<long>(t) * cols;
      for (int j = 0; j < cols; ++j) {
        if (r[j] > o[j]) {
          o[j] = r[j];
          g[j] = t;
        }
      }
    }
  }
}

void set_num_threads(int n) {
  if (n >= 1) omp_set_num_threads(n);
}

int num_threads() { return omp_get_max_threads(); }

}  // namespace milnet::kernels
