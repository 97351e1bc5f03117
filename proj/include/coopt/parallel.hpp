#pragma once

#include <exception>
#include <vector>

namespace coopt {

/// How independent loops (agents, regression rows, randomized trials) run.
/// The serial path is the reference; the OpenMP path must produce identical
/// results because every index writes only its own slot.
enum class Execution { kSerial, kOpenMP };

/// Calls body(i) for i in [0, n). Exceptions thrown by any index are captured
/// and the one with the smallest index is rethrown after the loop.
template <typename Body>
void parallel_for(int n, Execution exec, Body&& body) {
  std::vector<std::exception_ptr> errors(n > 0 ? n : 0);
  if (exec == Execution::kOpenMP) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    for (int i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace coopt
