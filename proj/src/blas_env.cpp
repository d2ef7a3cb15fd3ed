// OpenBLAS environment priming.
//
// Two settings must be in place before OpenBLAS's own ELF constructor runs
// its core detection:
//   * OPENBLAS_NUM_THREADS=1 — deterministic, single-threaded kernels; all
//     parallelism in this project happens above BLAS level.
//   * OPENBLAS_CORETYPE=SKYLAKEX — on virtualized CPUs that report AVX-512
//     feature bits but an unrecognized model string, OpenBLAS 0.3.x falls
//     back to a generic kernel that is ~3.5x slower than the AVX-512 one.
//
// Both are set only if the user has not set them already (overwrite=0).
// This relies on linking OpenBLAS *statically*: constructor priority 101
// then guarantees we run before its (unprioritized) init. With the shared
// library this object would run too late, which is harmless but slow.

#include <cstdlib>

namespace {

__attribute__((constructor(101))) void prime_blas_env() {
  ::setenv("OPENBLAS_NUM_THREADS", "1", 0);
#if defined(__x86_64__) && defined(__GNUC__)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx512f") && __builtin_cpu_supports("avx512dq") &&
      __builtin_cpu_supports("avx512bw") && __builtin_cpu_supports("avx512vl")) {
    ::setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 0);
  }
#endif
}

}  // namespace
