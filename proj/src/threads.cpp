#include "grushin/config.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace grushin {

int apply_thread_limit()
{
    const char* env = std::getenv("GRUSHIN_LAB_THREADS");
    if (!env || !*env) return 0;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) throw std::invalid_argument("GRUSHIN_LAB_THREADS: must be a positive integer");
#ifdef _OPENMP
    omp_set_num_threads(static_cast<int>(n));
#endif
    return static_cast<int>(n);
}

}  // namespace grushin
