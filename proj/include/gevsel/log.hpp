#pragma once

#include <functional>
#include <string>

namespace gevsel::log {

enum class Level { Debug, Info, Warning };

using Sink = std::function<void(Level, const std::string&)>;

/// Replaces the process-wide sink. The default prints warnings to stderr and
/// drops everything else. Pass nullptr to restore the default.
void set_sink(Sink sink);

void write(Level level, const std::string& msg);
inline void debug(const std::string& msg) { write(Level::Debug, msg); }
inline void info(const std::string& msg) { write(Level::Info, msg); }
inline void warn(const std::string& msg) { write(Level::Warning, msg); }

}  // namespace gevsel::log
