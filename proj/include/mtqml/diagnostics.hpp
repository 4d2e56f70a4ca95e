#pragma once

#include <functional>
#include <string>

namespace mtqml {

using WarningHandler = std::function<void(const std::string&)>;

/// Replaces the process-wide warning sink and returns the previous one.
/// The default sink writes "mtqml warning: <msg>" to stderr.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(const std::string& message);

}  // namespace mtqml
