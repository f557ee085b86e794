#pragma once

namespace ctcs {

/// Entry point behind the ctcs_hrrl binary. Exit codes: 0 success,
/// 1 verification violation, 2 bad configuration or usage, 3 I/O failure.
int run_cli(int argc, const char* const* argv);

}  // namespace ctcs
