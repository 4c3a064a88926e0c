#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace tempfit {

/// Worker count used when a caller passes 0: $TEMPFIT_THREADS if set to a
/// positive integer, otherwise std::thread::hardware_concurrency().
unsigned default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Iterations are handed out dynamically, so body must not depend on which
/// worker runs it. The first exception thrown by any iteration is rethrown.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body);

/// Independent generator for one shard of a seeded computation. The stream
/// depends only on (seed, stream, shard), never on scheduling.
std::mt19937_64 shard_rng(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t shard);

}  // namespace tempfit
