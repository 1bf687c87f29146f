#pragma once

#include <functional>
#include <string>

namespace optomag {

// Warnings are routed through a process-wide sink. In strict mode every
// warning is raised as the exception type chosen by the call site.

using WarningSink = std::function<void(const std::string&)>;

void set_warning_sink(WarningSink sink);
void set_strict(bool strict);
bool strict();

/// Emits a warning; in strict mode throws `E` instead.
template <class E>
void warn(const std::string& message);

namespace detail {
void emit_warning(const std::string& message);
}

template <class E>
void warn(const std::string& message) {
    if (strict()) throw E(message);
    detail::emit_warning(message);
}

}  // namespace optomag
