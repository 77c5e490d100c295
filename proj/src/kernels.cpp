#include "gcf/kernels.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gcf::kernels {

bool openmp_enabled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int effective_workers() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
#else
    int n = 1;
#endif
    if (const char* env = std::getenv("GCF_LAB_WORKERS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1 && cap < n) n = cap;
        } catch (...) {
            // unparsable cap: ignore
        }
    }
    return n;
}

void for_each_slice(std::size_t count, const std::function<void(std::size_t)>& body, bool parallel) {
#ifdef _OPENMP
    if (parallel && count > 1) {
        const int workers = effective_workers();
#pragma omp parallel for schedule(static) num_threads(workers)
        for (long long i = 0; i < static_cast<long long>(count); ++i)
            body(static_cast<std::size_t>(i));
        return;
    }
#endif
    (void)parallel;
    for (std::size_t i = 0; i < count; ++i) body(i);
}

}  // namespace gcf::kernels
