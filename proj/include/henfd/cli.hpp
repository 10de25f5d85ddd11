#pragma once

namespace henfd {

// Entry point behind the `henfd` binary. Returns the process exit status:
// 0 success, 1 runtime failure, 2 bad flags.
int run_cli(int argc, char** argv);

}  // namespace henfd
