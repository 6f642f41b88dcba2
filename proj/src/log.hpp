#pragma once

#include <spdlog/spdlog.h>

namespace hairforge::detail {

// stderr logger whose level comes from HAIRFORGE_LOG (trace, debug, info,
// warn, error, off). Defaults to warn.
spdlog::logger& log();

}  // namespace hairforge::detail
