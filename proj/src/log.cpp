#include "mfgp/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace mfgp {

namespace {

    std::atomic<int> g_level{static_cast<int>(LogLevel::Warning)};
    std::mutex g_mutex;

    void default_sink(const LogRecord& r)
    {
        static constexpr const char* names[] = {"error", "warning", "info", "debug"};
        std::cerr << "[mfgp " << names[static_cast<int>(r.level)] << "] " << r.code << ": " << r.message
                  << '\n';
    }

    LogSink& sink()
    {
        static LogSink s = default_sink;
        return s;
    }

} // namespace

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

LogSink set_log_sink(LogSink s)
{
    std::lock_guard lock(g_mutex);
    LogSink previous = std::move(sink());
    sink() = s ? std::move(s) : LogSink(default_sink);
    return previous;
}

void log(LogLevel level, std::string_view code, std::string_view message)
{
    if (static_cast<int>(level) > g_level.load())
        return;
    std::lock_guard lock(g_mutex);
    sink()(LogRecord{level, std::string(code), std::string(message)});
}

} // namespace mfgp
