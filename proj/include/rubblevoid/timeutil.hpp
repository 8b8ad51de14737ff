#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace rubblevoid {

/// UTC acquisition time of one flight, second resolution.
using Epoch = std::chrono::sys_seconds;

/// Accepts `YYYY-MM-DDTHH:MM:SSZ` (the `T` may be a space, the `Z` is optional,
/// seconds may be omitted). Throws Error(InvalidArgument) otherwise.
Epoch parse_epoch(std::string_view text);
std::string format_epoch(Epoch e);

std::string utc_now_iso();

}  // namespace rubblevoid
