#include "symbnn/sample_set.hpp"

#include <fstream>
#include <ostream>

#include "symbnn/io.hpp"

namespace symbnn {

void SampleSet::add(ParamState state, DrawProvenance prov) {
  draws.push_back(std::move(state));
  provenance.push_back(prov);
}

void SampleSet::check() const {
  if (draws.size() != provenance.size()) throw Error("samples", "provenance incomplete");
  for (const auto &d : draws) {
    if (static_cast<std::size_t>(d.theta.size()) != arch.param_dim()) {
      throw Error("samples", "draw dimension does not match the architecture");
    }
  }
}

void write_samples_csv(std::ostream &os, const SampleSet &samples) {
  const std::size_t d = samples.arch.param_dim();
  os << "chain_id,draw_idx";
  for (std::size_t i = 1; i <= d; ++i) os << ",theta_" << i;
  os << ",log_sigma\n";
  for (std::size_t g = 0; g < samples.size(); ++g) {
    os << samples.provenance[g].chain_id << ',' << samples.provenance[g].draw_idx;
    for (Eigen::Index i = 0; i < samples.draws[g].theta.size(); ++i) {
      os << ',' << format_double(samples.draws[g].theta[i]);
    }
    os << ',' << format_double(samples.draws[g].log_sigma) << '\n';
  }
}

void write_samples_csv(const std::string &path, const SampleSet &samples) {
  std::ofstream out(path);
  if (!out) throw Error("samples", "cannot write " + path);
  write_samples_csv(out, samples);
}

SampleSet read_samples_csv(std::istream &is, const Architecture &arch) {
  const CsvTable table = read_csv(is, "samples");
  const std::size_t d = arch.param_dim();
  if (table.header.size() != d + 3) {
    throw Error("samples", "sample file has " + std::to_string(table.header.size()) +
                               " columns, architecture implies " + std::to_string(d + 3));
  }
  SampleSet s;
  s.arch = arch;
  for (const auto &row : table.rows) {
    ParamState st;
    st.theta.resize(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) st.theta[static_cast<Eigen::Index>(i)] = row[i + 2];
    st.log_sigma = row[d + 2];
    s.add(std::move(st), {static_cast<int>(row[0]), 0, static_cast<int>(row[1])});
  }
  return s;
}

SampleSet read_samples_csv(const std::string &path, const Architecture &arch) {
  std::ifstream in(path);
  if (!in) throw Error("samples", "cannot open " + path);
  return read_samples_csv(in, arch);
}

}  // namespace symbnn
