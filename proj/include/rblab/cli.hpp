#pragma once

namespace rblab {

/// Entry point of the `rblab` executable. Returns 0 on success, 1 on runtime
/// failures and 2 on usage or configuration errors.
int run_cli(int argc, char** argv);

}  // namespace rblab
