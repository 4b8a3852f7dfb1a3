#include "septda/tensor.hpp"

#include <cblas.h>

extern "C" void openblas_set_num_threads(int);

namespace septda {
namespace flops {

namespace {
std::uint64_t g_macs = 0;
struct BlasInit {
  BlasInit() { openblas_set_num_threads(1); }
};
const BlasInit g_blas_init;
}  // namespace

std::uint64_t macs() { return g_macs; }
void reset_macs() { g_macs = 0; }
void add_macs(std::uint64_t n) { g_macs += n; }

}  // namespace flops

namespace detail {

void gemm_f32(bool ta, bool tb, int m, int n, int k, const float* a, const float* b,
              float beta, float* c) {
  flops::add_macs(static_cast<std::uint64_t>(m) * n * k);
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              m, n, k, 1.0f, a, ta ? m : k, b, tb ? k : n, beta, c, n);
}

void gemm_f64(bool ta, bool tb, int m, int n, int k, const double* a, const double* b,
              double beta, double* c) {
  flops::add_macs(static_cast<std::uint64_t>(m) * n * k);
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              m, n, k, 1.0, a, ta ? m : k, b, tb ? k : n, beta, c, n);
}

}  // namespace detail
}  // namespace septda
