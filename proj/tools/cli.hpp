#pragma once

// Command-line front end. Exit codes: 0 ok, 1 verification failure,
// 2 bad arguments or input files, 3 model error, 4 fit did not converge.

#include <ostream>

namespace nvp::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nvp::cli
