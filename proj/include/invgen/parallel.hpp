#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace invgen {

/// How per-sample kernels are executed. Both paths produce identical results
/// in identical order; the serial one is the reference the tests compare against.
enum class Execution { Serial, Parallel };

namespace detail {

inline void rethrow_first(const std::vector<std::exception_ptr>& errors) {
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// out[i] = f(i) for i < count.
///
/// An exception thrown for some index is rethrown after the loop; when several
/// indices fail, the lowest index wins regardless of scheduling.
template <class R, class F>
std::vector<R> map_indices(std::size_t count, F&& f, Execution exec = Execution::Parallel) {
    std::vector<R> out(count);
    std::vector<std::exception_ptr> errors(count);
    if (exec == Execution::Serial) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                out[i] = f(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < n; ++i) {
            try {
                out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    }
    detail::rethrow_first(errors);
    return out;
}

inline int worker_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace invgen
