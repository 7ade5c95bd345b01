#pragma once

namespace fmea {

// Entry point behind the `fmea` binary; exposed so tests can drive
// subcommands in-process. Exit codes: 0 success, 1 domain errors, 2 usage
// errors.
int dispatch(int argc, const char* const* argv);

}  // namespace fmea
