#pragma once

#include <functional>
#include <string>

namespace tsemd {

/// Warnings go to stderr unless a sink is installed (returns the previous one).
using WarningSink = std::function<void(const std::string&)>;
WarningSink set_warning_sink(WarningSink sink);
void log_warning(const std::string& message);

}  // namespace tsemd
