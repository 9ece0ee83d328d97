#pragma once

#include <string>
#include <vector>

namespace sepgan {

// Entry point behind the sepgan binary; exposed so tests can drive
// subcommands in-process. Returns the process exit status.
int dispatch(const std::vector<std::string>& args);

}  // namespace sepgan
