#pragma once

namespace adavsr {

/// Entry point of the `adavsr` command-line tool. Returns the process exit
/// code: 0 on success, 1 on a failed contract or runtime error, 2 on usage
/// errors and missing input paths.
int run_cli(int argc, char** argv);

}  // namespace adavsr
