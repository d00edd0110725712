#pragma once

#include <string>

// Thin logging facade. Verbosity comes from the HEBBDQN_LOG environment
// variable (trace, debug, info, warn, error, off); default warn.
namespace hebbdqn::log {

void Debug(const std::string& message);
void Info(const std::string& message);
void Warn(const std::string& message);

// Re-reads HEBBDQN_LOG.
void ReloadLevel();

}  // namespace hebbdqn::log
