#include "optomag/diagnostics.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace optomag {
namespace {

std::atomic<bool> g_strict{false};
std::mutex g_sink_mutex;
WarningSink g_sink;

}  // namespace

void set_warning_sink(WarningSink sink) {
    std::lock_guard lock(g_sink_mutex);
    g_sink = std::move(sink);
}

void set_strict(bool value) { g_strict.store(value); }

bool strict() { return g_strict.load(); }

namespace detail {

void emit_warning(const std::string& message) {
    std::lock_guard lock(g_sink_mutex);
    if (g_sink) {
        g_sink(message);
    } else {
        std::cerr << "warning: " << message << '\n';
    }
}

}  // namespace detail
}  // namespace optomag
