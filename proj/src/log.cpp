#include "coforget/log.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace coforget {

spdlog::logger& logger() {
  static const std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("coforget");
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("COFORGET_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::err);
    return l;
  }();
  return *instance;
}

}  // namespace coforget
