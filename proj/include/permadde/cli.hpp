#pragma once

// Command-line front end. Exit codes: 0 ok, 1 usage or input error,
// 2 numeric failure, 3 no theorem applies, 4 verification failure.

#include <iosfwd>

namespace permadde {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitNumeric = 2,
    kExitNoVerdict = 3,
    kExitVerifyFailed = 4,
};

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace permadde
