// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <string>

namespace s2t::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3 };

/// Minimum level that gets printed. Machine output never goes through here;
/// logging is stderr only so stdout stays scriptable.
Level& threshold();

void emit(Level level, const std::string& msg);

inline void debug(const std::string& msg) { emit(Level::Debug, msg); }
inline void info(const std::string& msg) { emit(Level::Info, msg); }
inline void warn(const std::string& msg) { emit(Level::Warn, msg); }
inline void error(const std::string& msg) { emit(Level::Error, msg); }

}  // namespace s2t::log
