#include "symbnn/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace symbnn {

namespace {

std::vector<std::string> split_line(const std::string &line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string &text, double &out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char *first = t.data();
  const char *last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

CsvTable read_csv(std::istream &is, const std::string &source) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (!have_header) {
      double probe = 0.0;
      for (const auto &c : cells) {
        if (parse_number(c, probe)) {
          throw Error("csv", source + ": missing header row (row 1 is numeric)");
        }
        table.header.push_back(trim(c));
      }
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw Error("csv", source + ": row " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(table.header.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_number(cells[c], row[c])) {
        throw Error("csv", source + ": non-numeric cell at row " + std::to_string(line_no) +
                               ", column " + std::to_string(c + 1) + " ('" + trim(cells[c]) + "')");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw Error("csv", source + ": empty file");
  return table;
}

CsvTable read_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("csv", "cannot open " + path);
  return read_csv(in, path);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json arch_to_json(const Architecture &arch) {
  return {{"layers", arch.widths()}, {"activation", to_string(arch.activation())}};
}

Architecture arch_from_json(const nlohmann::json &j) {
  if (!j.contains("layers") || !j["layers"].is_array()) {
    throw Error("arch", "architecture JSON needs a \"layers\" array");
  }
  const auto widths = j["layers"].get<std::vector<int>>();
  const auto act = activation_from_string(j.value("activation", std::string("tanh")));
  return Architecture(widths, act);
}

Architecture read_arch(const std::string &path) { return arch_from_json(read_json(path)); }

nlohmann::json read_json(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("json", "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw Error("json", path + ": " + e.what());
  }
}

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write " + path);
  out << text;
}

}  // namespace symbnn
