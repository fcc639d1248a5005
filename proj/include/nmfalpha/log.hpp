#ifndef NMFALPHA_LOG_HPP_
#define NMFALPHA_LOG_HPP_

#include <functional>
#include <string>

namespace nmfa {

using WarningSink = std::function<void(const std::string&)>;

/// Emits a non-fatal diagnostic. The default sink writes to std::clog.
void warn(const std::string& message);

/// Replaces the sink and returns the previous one. Pass an empty function
/// to restore the default.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace nmfa

#endif  // NMFALPHA_LOG_HPP_
