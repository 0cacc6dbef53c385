#include "gevsel/log.hpp"

#include <iostream>
#include <mutex>

namespace gevsel::log {
namespace {

std::mutex g_mutex;
Sink g_sink;

}  // namespace

void set_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void write(Level level, const std::string& msg) {
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(level, msg);
    return;
  }
  if (level == Level::Warning) std::cerr << "warning: " << msg << '\n';
}

}  // namespace gevsel::log
