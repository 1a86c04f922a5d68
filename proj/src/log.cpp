#include "netmorph/log.hpp"

#include <atomic>
#include <iostream>

namespace netmorph::log {

namespace {
std::atomic<Level> g_level{Level::kWarn};
}

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void warn(std::string_view msg) {
  if (g_level.load() >= Level::kWarn) std::cerr << "netmorph: warning: " << msg << '\n';
}

void info(std::string_view msg) {
  if (g_level.load() >= Level::kInfo) std::cerr << "netmorph: " << msg << '\n';
}

}  // namespace netmorph::log
