#ifndef SYMBNN_CLI_HPP_
#define SYMBNN_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace symbnn {

// Runs the `symbnn` command line. `args` excludes the program name. Results
// go to `out` as JSON, summaries and errors to `err`. Returns the exit code.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace symbnn

#endif  // SYMBNN_CLI_HPP_
