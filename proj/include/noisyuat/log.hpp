#pragma once

#include <functional>
#include <string>

namespace noisyuat {

using WarningSink = std::function<void(const std::string&)>;

// Routes library warnings; the default sink writes to stderr and an empty
// sink restores it.
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace noisyuat
