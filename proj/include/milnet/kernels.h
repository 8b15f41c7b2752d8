#ifndef MILNET_KERNELS_H_
#define MILNET_KERNELS_H_

// Dense row-major kernels behind the autodiff ops. The default namespace holds
// the OpenMP versions; milnet::kernels::reference holds plain serial loops
// used as the oracle in tests and as the baseline in the benchmark.
//
// Every output element is reduced in the same (ascending) order by both
// versions and by every thread count, so results are bitwise reproducible.

#include <span>

namespace milnet::kernels {

// c(m×n) = a(m×k) · b(k×n)
void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> c, int m, int k, int n);

// c(m×n) += a(m×k) · b(n×k)ᵀ
void matmul_nt_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int m, int k, int n);

// c(m×n) += a(k×m)ᵀ · b(k×n)
void matmul_tn_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int m, int k, int n);

// Column-wise max over consecutive blocks of `stride` rows of x, considering
// only the first valid[s] rows of block s. Writes the maximum into out(s, j)
// and the winning row offset into arg(s, j) (first index on ties). Blocks
// with no valid rows produce 0 and arg -1.
void segment_max(std::span<const double> x, int stride, int cols,
                 std::span<const int> valid, std::span<double> out,
                 std::span<int> arg);

void set_num_threads(int n);
int num_threads();

namespace reference {

void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> c, int m, int k, int n);
void matmul_nt_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int m, int k, int n);
void matmul_tn_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int m, int k, int n);
void segment_max(std::span<const double> x, int stride, int cols,
                 std::span<const int> valid, std::span<double> out,
                 std::span<int> arg);

}  // namespace reference
}  // namespace milnet::kernels

#endif  // MILNET_KERNELS_H_
