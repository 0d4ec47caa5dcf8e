// Command-line surface. Subcommands: phantom-gen, sample, perturb-edit,
// local-edit, evaluate, augment, sweep. Each writes a fresh results
// directory (it refuses a non-empty one) containing volumes, a manifest,
// the config snapshot and reports.
//
// Failures print a single line to `err`:
//   sibgen-error kind=<kind> message="<text>"
// and return a nonzero code (2 usage, 3 io, 4 config, 1 pipeline).
#pragma once

#include <iosfwd>

namespace sibgen {

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sibgen
