#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace coforget {

/// Shared stderr logger. Level comes from COFORGET_LOG (trace, debug, info,
/// warn, error, off); default is error.
spdlog::logger& logger();

}  // namespace coforget
