#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace resnet {

/// Runs one resnet command. Errors are reported on err as
/// "module/operation: kind: message" and yield a nonzero status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Thread cap from RESNET_THREADS; 0 when unset.
int thread_limit_from_env();

}  // namespace resnet
