#pragma once

#include <cstddef>
#include <span>

// Dense GEMM kernels. Two implementations share one contract: every output
// element is accumulated over k strictly left to right, so the serial and
// OpenMP variants agree bit for bit. The serial versions are the reference
// the parallel ones are tested against.
namespace ptrain::kernels {

namespace serial {

// c[m x n] = a[m x k] * b[k x n]
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
// c[m x n] = a[m x k] * b[n x k]^T
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
// c[m x n] = a[k x m]^T * b[k x n]
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);

}  // namespace serial

namespace parallel {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);

}  // namespace parallel

/// Caps worker threads for every parallel region in the library. 0 restores the runtime default.
void set_num_threads(int n);
int num_threads();

/// Reads PERTURB_TRAIN_THREADS; returns 0 when unset or unparsable.
int threads_from_env();

}  // namespace ptrain::kernels
