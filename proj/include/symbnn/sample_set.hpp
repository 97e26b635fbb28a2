#ifndef SYMBNN_SAMPLE_SET_HPP_
#define SYMBNN_SAMPLE_SET_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "symbnn/model.hpp"
#include "symbnn/net.hpp"

namespace symbnn {

struct DrawProvenance {
  int chain_id = 0;
  std::uint64_t seed = 0;
  int draw_idx = 0;
};

// Posterior draws with per-draw provenance.
struct SampleSet {
  Architecture arch;
  std::vector<ParamState> draws;
  std::vector<DrawProvenance> provenance;

  std::size_t size() const { return draws.size(); }
  bool empty() const { return draws.empty(); }
  void add(ParamState state, DrawProvenance prov);
  void check() const;
};

// CSV with header: chain_id,draw_idx,theta_1..theta_d,log_sigma. Values are
// written with 17 significant digits so files round-trip exactly.
void write_samples_csv(std::ostream &os, const SampleSet &samples);
void write_samples_csv(const std::string &path, const SampleSet &samples);
SampleSet read_samples_csv(std::istream &is, const Architecture &arch);
SampleSet read_samples_csv(const std::string &path, const Architecture &arch);

}  // namespace symbnn

#endif  // SYMBNN_SAMPLE_SET_HPP_
