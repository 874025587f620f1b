#ifndef VOLWINDOW_LOG_HPP
#define VOLWINDOW_LOG_HPP

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <mutex>
#include <string>

namespace volwindow {

enum class LogLevel : int { error = 0, warn = 1, info = 2, debug = 3 };

// Level comes from the VOLWINDOW_LOG environment variable
// (error|warn|info|debug); default is warn. All diagnostics go to stderr so
// stdout stays machine-parseable JSON.
inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("VOLWINDOW_LOG");
        if (env == nullptr) return LogLevel::warn;
        if (std::strcmp(env, "error") == 0) return LogLevel::error;
        if (std::strcmp(env, "warn") == 0) return LogLevel::warn;
        if (std::strcmp(env, "info") == 0) return LogLevel::info;
        if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
        return LogLevel::warn;
    }();
    return level;
}

inline void log_message(LogLevel level, const std::string& msg) {
    if (static_cast<int>(level) > static_cast<int>(log_level())) return;
    static std::mutex mtx;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::lock_guard<std::mutex> lock(mtx);
    std::cerr << "[volwindow:" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

inline void log_error(const std::string& msg) { log_message(LogLevel::error, msg); }
inline void log_warn(const std::string& msg) { log_message(LogLevel::warn, msg); }
inline void log_info(const std::string& msg) { log_message(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_message(LogLevel::debug, msg); }

} // namespace volwindow

#endif
