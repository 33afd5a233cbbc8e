#pragma once

namespace daps {

/// Kernels with a data-parallel loop come in two flavours: the OpenMP path
/// and a plain serial loop kept as the reference for tests and benchmarks.
/// Both produce identical results.
enum class Exec { kSerial, kParallel };

/// Sets the OpenMP team size used by Exec::kParallel kernels (n < 1 keeps the
/// runtime default).
void set_threads(int n);
int max_threads();

}  // namespace daps
