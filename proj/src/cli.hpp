#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ecc::cli {

// Runs one command line (args excludes the program name); returns the exit code.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace ecc::cli
