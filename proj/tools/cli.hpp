// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hclip::cli {

enum ExitCode : int { ok = 0, violations = 1, bad_input = 2, numerical = 3 };

/// Entry point shared by the executable and the in-process tests. `args`
/// excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hclip::cli
