#ifndef INTERVALBF_PARALLEL_HPP
#define INTERVALBF_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace intervalbf {

/// Worker count from INTERVALBF_THREADS; 0, unset or unparsable means
/// std::thread::hardware_concurrency().
std::size_t default_threads();

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = default).
/// The first exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace intervalbf

#endif  // INTERVALBF_PARALLEL_HPP
