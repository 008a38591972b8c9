#pragma once
// Deterministic worker pool. Work is cut into fixed-size blocks addressed by
// index; workers claim blocks from an atomic cursor and write each block's
// partial result into a slot owned by that block. Callers fold the slots in
// block order afterwards, so the combined result is bit-identical for any
// worker count, including one.
//
// HOPFSIM_THREADS (positive integer) caps the worker count; it is read at
// each parallel region so tests can vary it within a process.

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace hopfsim {

inline constexpr std::uint64_t kBlockSize = 1 << 14;

inline unsigned worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("HOPFSIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) hw = static_cast<unsigned>(v);
  }
  return hw;
}

// Runs fn(block_index, begin, end) over [0, n) cut into blocks of the given
// size. fn must only write state owned by its block index.
template <typename Fn>
void for_each_block(std::uint64_t n, std::uint64_t block_size, Fn&& fn) {
  if (n == 0) return;
  if (block_size == 0) block_size = 1;
  const std::uint64_t blocks = (n + block_size - 1) / block_size;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(worker_count(), blocks));

  if (workers <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b)
      fn(b, b * block_size, std::min(n, (b + 1) * block_size));
    return;
  }

  std::atomic<std::uint64_t> cursor{0};
  auto drain = [&] {
    for (;;) {
      const std::uint64_t b = cursor.fetch_add(1, std::memory_order_relaxed);
      if (b >= blocks) return;
      fn(b, b * block_size, std::min(n, (b + 1) * block_size));
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(drain);
  drain();
  for (auto& t : pool) t.join();
}

template <typename Fn>
void for_each_block(std::uint64_t n, Fn&& fn) {
  for_each_block(n, kBlockSize, static_cast<Fn&&>(fn));
}

inline std::uint64_t block_count(std::uint64_t n) {
  return n == 0 ? 0 : (n + kBlockSize - 1) / kBlockSize;
}

}  // namespace hopfsim
