// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace dagwgan {

/// Subcommands: simulate | train | evaluate | generate | dimprob.
/// Exit codes: 0 success, 1 usage error, 2 data error, 3 training did not
/// converge (results are still written).
int cli_main(int argc, const char* const* argv);

/// Same, from plain strings (program name excluded).
int run_cli(const std::vector<std::string>& args);

} // namespace dagwgan
