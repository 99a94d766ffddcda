#include "overthink/log.hpp"

#include <atomic>

namespace overthink::log {

namespace {
std::atomic<Level> g_level{Level::warn};
}

Level level() { return g_level.load(std::memory_order_relaxed); }
void set_level(Level level) { g_level.store(level, std::memory_order_relaxed); }

}  // namespace overthink::log
