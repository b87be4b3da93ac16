#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace mfgp {

enum class LogLevel { Error = 0, Warning = 1, Info = 2, Debug = 3 };

/// Structured diagnostic. `code` is a stable machine-readable tag.
struct LogRecord {
    LogLevel level;
    std::string code;
    std::string message;
};

using LogSink = std::function<void(const LogRecord&)>;

void set_log_level(LogLevel level);
LogLevel log_level();

/// Replaces the sink (default: one line on stderr). Returns the previous sink.
LogSink set_log_sink(LogSink sink);

void log(LogLevel level, std::string_view code, std::string_view message);

inline void log_warning(std::string_view code, std::string_view message)
{
    log(LogLevel::Warning, code, message);
}
inline void log_info(std::string_view code, std::string_view message)
{
    log(LogLevel::Info, code, message);
}

} // namespace mfgp
