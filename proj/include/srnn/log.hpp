#pragma once

#include <cstdlib>
#include <iostream>
#include <string_view>

namespace srnn::log {

enum class Level { error = 0, info = 1, debug = 2 };

// Read once from SRNN_LOG (error|info|debug); defaults to info.
inline Level threshold() {
    static const Level level = [] {
        const char* env = std::getenv("SRNN_LOG");
        if (!env) return Level::info;
        const std::string_view v(env);
        if (v == "error") return Level::error;
        if (v == "debug") return Level::debug;
        return Level::info;
    }();
    return level;
}

template <typename... Args>
void write(Level level, const Args&... args) {
    if (static_cast<int>(level) > static_cast<int>(threshold())) return;
    constexpr std::string_view tags[] = {"error", "info", "debug"};
    std::cerr << "[srnn " << tags[static_cast<int>(level)] << "] ";
    (std::cerr << ... << args) << '\n';
}

template <typename... Args> void error(const Args&... a) { write(Level::error, a...); }
template <typename... Args> void info(const Args&... a) { write(Level::info, a...); }
template <typename... Args> void debug(const Args&... a) { write(Level::debug, a...); }

}  // namespace srnn::log
