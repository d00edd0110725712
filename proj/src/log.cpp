#include "hebbdqn/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <mutex>

namespace hebbdqn::log {

namespace {

spdlog::level::level_enum LevelFromEnv() {
  const char* env = std::getenv("HEBBDQN_LOG");
  if (env == nullptr || *env == '\0') return spdlog::level::warn;
  return spdlog::level::from_str(env);
}

spdlog::logger& Logger() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("hebbdqn");
    l->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    l->set_level(LevelFromEnv());
    return l;
  }();
  return *logger;
}

}  // namespace

void Debug(const std::string& message) { Logger().debug(message); }
void Info(const std::string& message) { Logger().info(message); }
void Warn(const std::string& message) { Logger().warn(message); }

void ReloadLevel() { Logger().set_level(LevelFromEnv()); }

}  // namespace hebbdqn::log
