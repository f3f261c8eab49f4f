#pragma once

#include <iosfwd>

namespace shortstop {

// Full command-line surface: run | select | analyze | validate.
//
//   run       race every problem and append the trace
//   select    apply the selection strategies to a trace and report the table
//   analyze   uncertainty | critical | tokendist | divergence | pareto
//   validate  check config, problem set, and (when present) trace integrity
//
// Flags: --config PATH (required), --trace PATH, --seed INT, --out DIR.
// Exit status: 0 ok, 2 config error, 3 backend error, 4 data error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace shortstop
