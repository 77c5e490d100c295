#pragma once

#include <cstddef>
#include <functional>

// Batch slice engine: every per-slice loop in the cylinder solvers routes
// through for_each_slice so the OpenMP path and the serial reference path
// execute the same per-slice code and can be compared bit for bit.
namespace gcf::kernels {

bool openmp_enabled();

// Worker cap: min(omp_get_max_threads(), GCF_LAB_WORKERS if set).
int effective_workers();

void for_each_slice(std::size_t count, const std::function<void(std::size_t)>& body, bool parallel);

}  // namespace gcf::kernels
