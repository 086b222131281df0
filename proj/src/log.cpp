#include "encpipe/log.hpp"

#include <cstdlib>
#include <cstring>
#include <mutex>

namespace encpipe {

namespace {

LogLevel parse_level() {
    const char* env = std::getenv("ENCPIPE_LOG");
    if (!env || !*env) return LogLevel::info;
    if (std::strcmp(env, "error") == 0) return LogLevel::error;
    if (std::strcmp(env, "warn") == 0) return LogLevel::warn;
    if (std::strcmp(env, "info") == 0) return LogLevel::info;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    return LogLevel::info;
}

std::mutex g_mutex;

} // namespace

LogLevel log_level() {
    static const LogLevel level = parse_level();
    return level;
}

void log_message(LogLevel level, const std::string& msg) {
    if (level > log_level()) return;
    const char* tag = "info";
    switch (level) {
        case LogLevel::error: tag = "error"; break;
        case LogLevel::warn: tag = "warn"; break;
        case LogLevel::info: tag = "info"; break;
        case LogLevel::debug: tag = "debug"; break;
    }
    std::lock_guard<std::mutex> lock(g_mutex);
    std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

} // namespace encpipe
