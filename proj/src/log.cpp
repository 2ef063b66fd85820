// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/log.hpp"

#include <mutex>

namespace s2t::log {

namespace {
std::mutex g_mutex;
const char* tag(Level level) {
    switch (level) {
        case Level::Debug: return "debug";
        case Level::Info: return "info";
        case Level::Warn: return "warn";
        case Level::Error: return "error";
    }
    return "?";
}
}  // namespace

Level& threshold() {
    static Level level = Level::Info;
    return level;
}

void emit(Level level, const std::string& msg) {
    if (level < threshold()) return;
    std::lock_guard<std::mutex> lock(g_mutex);
    std::fprintf(stderr, "[%s] %s\n", tag(level), msg.c_str());
}

}  // namespace s2t::log
