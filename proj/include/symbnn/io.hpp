#ifndef SYMBNN_IO_HPP_
#define SYMBNN_IO_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "symbnn/net.hpp"

namespace symbnn {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Numeric CSV with a header row. Errors name the offending row and column
// (1-based, header is row 1).
CsvTable read_csv(std::istream &is, const std::string &source = "<stream>");
CsvTable read_csv(const std::string &path);

std::string format_double(double v);

// {"layers": [n, ..., m], "activation": "tanh"}
nlohmann::json arch_to_json(const Architecture &arch);
Architecture arch_from_json(const nlohmann::json &j);
Architecture read_arch(const std::string &path);

nlohmann::json read_json(const std::string &path);
void write_text(const std::string &path, const std::string &text);

}  // namespace symbnn

#endif  // SYMBNN_IO_HPP_
