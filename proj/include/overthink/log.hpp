#pragma once

#include <cstdio>
#include <string_view>
#include <utility>

#include <fmt/core.h>

// Human-readable progress on stderr. Machine-readable output never goes here.
namespace overthink::log {

enum class Level { quiet = 0, warn = 1, info = 2 };

Level level();
void set_level(Level level);

template <typename... Args>
void info(fmt::format_string<Args...> format, Args&&... args) {
  if (level() >= Level::info) fmt::print(stderr, "[info] {}\n", fmt::format(format, std::forward<Args>(args)...));
}

template <typename... Args>
void warn(fmt::format_string<Args...> format, Args&&... args) {
  if (level() >= Level::warn) fmt::print(stderr, "[warn] {}\n", fmt::format(format, std::forward<Args>(args)...));
}

}  // namespace overthink::log
