#ifndef SBGRAD_COUNTERS_HPP
#define SBGRAD_COUNTERS_HPP

#include <atomic>

namespace sbgrad {

// Work counters threaded through the solvers so tests and the CLI can assert
// cost contracts (one steady solve, one adjoint solve, and so on). Callers
// that don't care pass nullptr. Atomic so parallel sweep workers can share
// one instance.
struct Counters {
  std::atomic<long> steady_solves{0};
  std::atomic<long> adjoint_linear_solves{0};
  std::atomic<long> liouvillian_builds{0};
};

}  // namespace sbgrad

#endif
