#include "ptrain/kernels.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace ptrain::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelThreshold = 1 << 15;

bool go_parallel(std::size_t m, std::size_t k, std::size_t n) {
    return m > 1 && m * k * n >= kParallelThreshold && !omp_in_parallel() &&
           omp_get_max_threads() > 1;
}

inline void nn_row(const double* a, const double* b, double* c, std::size_t i, std::size_t k,
                   std::size_t n) {
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double av = ai[p];
        const double* bp = b + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
}

inline void nt_row(const double* a, const double* b, double* c, std::size_t i, std::size_t k,
                   std::size_t n) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
        const double* bj = b + j * k;
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
        ci[j] = acc;
    }
}

inline void tn_row(const double* a, const double* b, double* c, std::size_t i, std::size_t m,
                   std::size_t k, std::size_t n) {
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
        const double av = a[p * m + i];
        const double* bp = b + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
}

}  // namespace

namespace serial {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) nn_row(a.data(), b.data(), c.data(), i, k, n);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) nt_row(a.data(), b.data(), c.data(), i, k, n);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) tn_row(a.data(), b.data(), c.data(), i, m, k, n);
}

}  // namespace serial

namespace parallel {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
    const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (go_parallel(m, k, n))
    for (std::ptrdiff_t i = 0; i < rows; ++i)
        nn_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(i), k, n);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
    const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (go_parallel(m, k, n))
    for (std::ptrdiff_t i = 0; i < rows; ++i)
        nt_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(i), k, n);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
    const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (go_parallel(m, k, n))
    for (std::ptrdiff_t i = 0; i < rows; ++i)
        tn_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(i), m, k, n);
}

}  // namespace parallel

namespace {
int g_default_threads = 0;
}

void set_num_threads(int n) {
    if (g_default_threads == 0) g_default_threads = omp_get_max_threads();
    omp_set_num_threads(n > 0 ? n : g_default_threads);
}

int num_threads() { return omp_get_max_threads(); }

int threads_from_env() {
    const char* raw = std::getenv("PERTURB_TRAIN_THREADS");
    if (raw == nullptr) return 0;
    try {
        const int n = std::stoi(raw);
        return n > 0 ? n : 0;
    } catch (const std::exception&) {
        return 0;
    }
}

}  // namespace ptrain::kernels
