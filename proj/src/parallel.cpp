#include "defeat/parallel.hpp"

#include <atomic>

namespace defeat {

namespace {
std::atomic<std::size_t> g_workers{std::max(1u, std::thread::hardware_concurrency())};
}

std::size_t worker_count() { return g_workers.load(); }
void set_worker_count(std::size_t n) { g_workers.store(std::max<std::size_t>(1, n)); }

}  // namespace defeat
