#pragma once

#include <cstddef>
#include <functional>

namespace clusterguard {

/// Caps the worker count used by internally parallel kernels. 0 restores the default
/// (CLUSTER_GUARD_THREADS when set, else hardware concurrency).
void set_max_threads(unsigned n);
unsigned max_threads();

/// Splits [0, n) into contiguous chunks and calls fn(chunk_index, begin, end) once per chunk,
/// possibly concurrently. Returns the chunk count. Chunk boundaries depend only on n and
/// `chunks`, so callers that merge per-chunk buffers in chunk order stay deterministic.
std::size_t parallel_chunks(std::size_t n, std::size_t chunks,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace clusterguard
