#pragma once

// Offline replay of a command script against one instance on a fixed clock.

#include "pal/protocol.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace pal {

// Runs START, then every command `seconds_per_command` apart. Returns one
// envelope per line followed by the final STATUS snapshot.
std::string replay(const TaskDef& task, const std::vector<std::string>& commands, SessionOptions options = {},
                   double seconds_per_command = 0.05);

std::string sha256_hex(std::string_view data);

}  // namespace pal
