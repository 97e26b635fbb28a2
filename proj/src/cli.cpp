#include "symbnn/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "symbnn/analysis.hpp"
#include "symbnn/chains.hpp"
#include "symbnn/data.hpp"
#include "symbnn/io.hpp"
#include "symbnn/model.hpp"
#include "symbnn/removal.hpp"
#include "symbnn/sample_set.hpp"
#include "symbnn/sampler.hpp"

namespace symbnn {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Common {
  std::string arch_path;
  std::string data_path;
  std::string out;
  std::uint64_t seed = 0;
  int workers = 0;
};

std::vector<double> parse_list(const std::string &text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception &) {
      throw Error("cli", "cannot parse '" + item + "' as a number");
    }
  }
  return v;
}

// Columns are the architecture's inputs followed by its outputs.
RegressionData load_regression(const std::string &path, const Architecture &arch) {
  const CsvTable table = read_csv(path);
  const auto n = static_cast<std::size_t>(arch.input_dim());
  const auto m = static_cast<std::size_t>(arch.output_dim());
  if (table.header.size() != n + m) {
    throw Error("data", path + " has " + std::to_string(table.header.size()) +
                            " columns, architecture expects " + std::to_string(n) + " inputs + " +
                            std::to_string(m) + " outputs");
  }
  RegressionData d;
  const auto rows = static_cast<Eigen::Index>(table.rows.size());
  d.X.resize(rows, static_cast<Eigen::Index>(n));
  d.Y.resize(rows, static_cast<Eigen::Index>(m));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto &row = table.rows[static_cast<std::size_t>(r)];
    for (std::size_t c = 0; c < n; ++c) d.X(r, static_cast<Eigen::Index>(c)) = row[c];
    for (std::size_t c = 0; c < m; ++c) d.Y(r, static_cast<Eigen::Index>(c)) = row[n + c];
  }
  d.check(arch);
  return d;
}

void emit(const json &result, const std::string &out_path, std::ostream &out) {
  if (!out_path.empty()) {
    write_text(out_path, result.dump(2) + "\n");
  } else {
    out << result.dump(2) << '\n';
  }
}

SamplerConfig sampler_config(const std::string &config_path) {
  SamplerConfig c;
  if (config_path.empty()) return c;
  const json j = read_json(config_path);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.initial_step_size = j.value("initial_step_size", c.initial_step_size);
  c.target_accept = j.value("target_accept", c.target_accept);
  c.max_tree_depth = j.value("max_tree_depth", c.max_tree_depth);
  c.adapt_mass_matrix = j.value("adapt_mass_matrix", c.adapt_mass_matrix);
  c.seed = j.value("seed", c.seed);
  return c;
}

void write_states_csv(const std::string &path, const std::vector<ParamState> &states) {
  std::ofstream os(path);
  if (!os) throw Error("io", "cannot write " + path);
  const auto d = states.empty() ? 0 : states.front().theta.size();
  for (Eigen::Index i = 1; i <= d; ++i) os << "theta_" << i << ',';
  os << "log_sigma\n";
  for (const auto &s : states) {
    for (Eigen::Index i = 0; i < s.theta.size(); ++i) os << format_double(s.theta[i]) << ',';
    os << format_double(s.log_sigma) << '\n';
  }
}

json lppd_json(const LppdResult &r) {
  return {{"mean_lppd", r.mean}, {"se", r.std_error}, {"per_point", r.per_point}};
}

SampleSet states_as_samples(const Architecture &arch, const std::vector<ParamState> &states) {
  SampleSet s;
  s.arch = arch;
  for (std::size_t i = 0; i < states.size(); ++i) s.add(states[i], {static_cast<int>(i), 0, 0});
  return s;
}

struct GridOptions {
  double x_min = -3.0, x_max = 3.0, y_min = -3.0, y_max = 3.0;
  int x_points = 61, y_points = 121;
  int input_dim = 0, output_dim = 0;

  void add(CLI::App *app) {
    app->add_option("--x-min", x_min);
    app->add_option("--x-max", x_max);
    app->add_option("--x-points", x_points);
    app->add_option("--y-min", y_min);
    app->add_option("--y-max", y_max);
    app->add_option("--y-points", y_points);
    app->add_option("--input-dim", input_dim, "Input varied along the grid");
    app->add_option("--output-dim", output_dim, "Output evaluated on the grid");
  }

  GridSpec spec() const {
    GridSpec g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.x_points = x_points;
    g.y_min = y_min;
    g.y_max = y_max;
    g.y_points = y_points;
    g.input_dim = input_dim;
    g.output_dim = output_dim;
    return g;
  }
};

void write_grid_csv(const std::string &path, const PPDGrid &grid) {
  std::ofstream os(path);
  if (!os) throw Error("io", "cannot write " + path);
  os << "x,y,density\n";
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    for (std::size_t j = 0; j < grid.y.size(); ++j) {
      os << format_double(grid.x[i]) << ',' << format_double(grid.y[j]) << ','
         << format_double(grid.density(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
    }
  }
}

RowMatrix read_theta_points(const std::string &path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() < 4 || table.header.front() != "chain_id") {
    throw Error("cluster", path + " is not a sample file");
  }
  const auto d = static_cast<Eigen::Index>(table.header.size() - 3);
  RowMatrix points(static_cast<Eigen::Index>(table.rows.size()), d);
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    for (Eigen::Index c = 0; c < d; ++c) points(r, c) = table.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c + 2)];
  }
  return points;
}

json gen_data(const std::string &kind, std::size_t n, std::uint64_t seed, double train_frac,
              const std::string &spec_path, const std::string &dir, std::ostream &err) {
  Dataset data;
  json meta = {{"kind", kind}, {"n", n}, {"seed", seed}, {"train_frac", train_frac}};
  if (kind == "regression2d") {
    data = gen_regression2d(n, seed);
  } else if (kind == "sinusoidal") {
    const SinusoidSpec spec = spec_path.empty() ? SinusoidSpec{} : SinusoidSpec::from_json(read_json(spec_path));
    data = gen_sinusoidal(n, seed, spec);
    meta["spec"] = spec.to_json();
  } else {
    throw Error("gen-data", "unknown dataset kind '" + kind + "'");
  }
  const Split split = split_standardize(data, train_frac, seed);
  for (const auto &w : split.warnings) err << "warning: " << w << '\n';
  fs::create_directories(dir);
  write_csv((fs::path(dir) / "train.csv").string(), split.train);
  write_csv((fs::path(dir) / "test.csv").string(), split.test);
  meta["n_train"] = split.train.size();
  meta["n_test"] = split.test.size();
  meta["standardization"] = split.standardization.to_json();
  write_text((fs::path(dir) / "meta.json").string(), meta.dump(2) + "\n");
  return meta;
}

struct SampleOutcome {
  SampleSet samples;
  json summary;
};

SampleOutcome sample(const Architecture &arch, const RegressionData &data, SamplerConfig config,
                     int chains, int draws_per_chain) {
  const MlpPosterior posterior(arch, data);
  const RunResult run = run_chains(posterior, config, chains, draws_per_chain);
  SampleOutcome o;
  o.samples = collect_samples(arch, run, config);
  o.summary = {{"chains", chains},
               {"draws_per_chain", draws_per_chain},
               {"draws", o.samples.size()},
               {"failed_chains", run.failed_chains()},
               {"divergences", run.divergences()},
               {"mean_accept", run.mean_accept()},
               {"seed", config.seed},
               {"warmup", config.warmup_steps}};
  return o;
}

json bound(const std::vector<double> &pi, double target, long oracle_trials, std::uint64_t seed) {
  const ModeSpec spec(pi);
  const BoundResult r = chain_bound(spec, target);
  json j = {{"expected_chains", r.expected_chains},
            {"required_chains", r.required_chains},
            {"bound_probability", r.bound_probability},
            {"target", target},
            {"pi", pi}};
  if (oracle_trials > 0) {
    const auto est = mc_oracle_expected_chains(spec, oracle_trials, seed);
    j["oracle"] = {{"mean", est.mean}, {"se", est.std_error}, {"trials", est.trials}};
  }
  return j;
}

struct ExperimentConfig {
  Architecture arch;
  std::string dataset = "regression2d";
  std::size_t n_points = 256;
  SinusoidSpec sinusoid;
  double train_frac = 0.8;
  SamplerConfig sampler;
  int chains = 0;  // 0: take required_chains from the bound spec
  int draws_per_chain = 1;
  RemovalConfig removal;
  bool remove_symmetries = false;
  std::vector<double> pi{1.0};
  double p_target = 0.99;
  std::string out_dir = "experiment";
  std::uint64_t seed = 0;

  static ExperimentConfig from_json(const json &j) {
    ExperimentConfig c;
    c.arch = arch_from_json(j.at("arch"));
    c.seed = j.value("seed", c.seed);
    if (j.contains("dataset")) {
      const auto &d = j["dataset"];
      c.dataset = d.value("kind", c.dataset);
      c.n_points = d.value("n", c.n_points);
      c.train_frac = d.value("train_frac", c.train_frac);
      if (d.contains("spec")) c.sinusoid = SinusoidSpec::from_json(d["spec"]);
    }
    if (j.contains("sampler")) {
      const auto &s = j["sampler"];
      c.sampler.warmup_steps = s.value("warmup_steps", c.sampler.warmup_steps);
      c.sampler.target_accept = s.value("target_accept", c.sampler.target_accept);
      c.sampler.initial_step_size = s.value("initial_step_size", c.sampler.initial_step_size);
      c.sampler.max_tree_depth = s.value("max_tree_depth", c.sampler.max_tree_depth);
      c.chains = s.value("chains", c.chains);
      c.draws_per_chain = s.value("draws_per_chain", c.draws_per_chain);
    }
    if (j.contains("removal")) {
      const auto &r = j["removal"];
      c.remove_symmetries = r.value("enabled", true);
      c.removal.k = r.value("k", c.removal.k);
      c.removal.iterations = r.value("iterations", c.removal.iterations);
      c.removal.restarts = r.value("restarts", c.removal.restarts);
      c.removal.C = r.value("C", c.removal.C);
      c.removal.sweeps = r.value("sweeps", c.removal.sweeps);
    }
    if (j.contains("bound")) {
      c.pi = j["bound"].value("pi", c.pi);
      c.p_target = j["bound"].value("target", c.p_target);
    }
    c.out_dir = j.value("out_dir", c.out_dir);
    c.sampler.seed = c.seed;
    return c;
  }
};

json pipeline(const ExperimentConfig &cfg, std::ostream &err) {
  fs::create_directories(cfg.out_dir);
  const fs::path dir(cfg.out_dir);
  const BoundResult b = chain_bound(ModeSpec(cfg.pi), cfg.p_target);
  const int chains = cfg.chains > 0 ? cfg.chains : static_cast<int>(b.required_chains);
  err << "pipeline: " << chains << " chains (bound E(G) = " << b.expected_chains << ")\n";

  Dataset data = cfg.dataset == "sinusoidal" ? gen_sinusoidal(cfg.n_points, cfg.seed, cfg.sinusoid)
                                             : gen_regression2d(cfg.n_points, cfg.seed);
  const Split split = split_standardize(data, cfg.train_frac, cfg.seed);
  write_csv((dir / "train.csv").string(), split.train);
  write_csv((dir / "test.csv").string(), split.test);

  SampleOutcome so = sample(cfg.arch, split.train.regression(), cfg.sampler, chains, cfg.draws_per_chain);
  write_samples_csv((dir / "samples.csv").string(), so.samples);
  const LppdResult l = lppd(so.samples, split.test.regression());
  json result = {{"bound", {{"expected_chains", b.expected_chains}, {"required_chains", b.required_chains}}},
                 {"sampling", so.summary},
                 {"lppd", {{"mean_lppd", l.mean}, {"se", l.std_error}}}};
  if (cfg.remove_symmetries && cfg.arch.activation() == Activation::tanh) {
    Rng rng(derive_seed(cfg.seed, 1));
    const RemovalReport rep = geometry_removal(so.samples, cfg.removal, rng);
    write_samples_csv((dir / "canonical.csv").string(), so.samples);
    result["removal"] = rep.to_json();
  }
  write_text((dir / "result.json").string(), result.dump(2) + "\n");
  return result;
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Symmetry-aware MCMC toolkit for small tanh MLPs"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  int workers = 0;
  app.add_option("--workers", workers, "Worker threads (default: all available)");

  // gen-data
  std::string kind = "regression2d", spec_path, out_dir = ".";
  std::size_t n_points = 256;
  double train_frac = 0.8;
  std::uint64_t seed = 0;
  auto *gen = app.add_subcommand("gen-data", "Generate a synthetic dataset and its standardized split");
  gen->add_option("--kind", kind, "regression2d | sinusoidal");
  gen->add_option("--n", n_points);
  gen->add_option("--seed", seed);
  gen->add_option("--train-frac", train_frac);
  gen->add_option("--spec", spec_path, "Sinusoid spec JSON");
  gen->add_option("--out", out_dir, "Output directory");

  // sample
  std::string arch_path, data_path, out_path, config_path, diag_path;
  int chains = 1, draws_per_chain = 1, warmup = -1;
  auto *smp = app.add_subcommand("sample", "Run independent NUTS chains on the MLP posterior");
  smp->add_option("--arch", arch_path)->required();
  smp->add_option("--data", data_path)->required();
  smp->add_option("--config", config_path, "Sampler config JSON");
  smp->add_option("--seed", seed);
  smp->add_option("--chains", chains);
  smp->add_option("--draws-per-chain", draws_per_chain);
  smp->add_option("--warmup", warmup);
  smp->add_option("--out", out_path, "Sample CSV")->required();

  // bound
  std::string pi_text;
  double target = 0.99;
  long oracle_trials = 0;
  auto *bnd = app.add_subcommand("bound", "Expected and required number of chains");
  bnd->add_option("--pi", pi_text, "Comma-separated mode probabilities")->required();
  bnd->add_option("--target", target);
  bnd->add_option("--oracle-trials", oracle_trials, "Also run the Monte Carlo oracle");
  bnd->add_option("--seed", seed);
  bnd->add_option("--out", out_path);

  // remove-symmetries
  std::string samples_path, report_path;
  RemovalConfig removal;
  auto *rem = app.add_subcommand("remove-symmetries", "Map samples onto one representative set");
  rem->add_option("--samples", samples_path)->required();
  rem->add_option("--arch", arch_path)->required();
  rem->add_option("--out", out_path)->required();
  rem->add_option("--report", report_path);
  rem->add_option("--seed", seed);
  rem->add_option("--k", removal.k);
  rem->add_option("--iterations", removal.iterations);
  rem->add_option("--restarts", removal.restarts);
  rem->add_option("--C", removal.C);
  rem->add_option("--sweeps", removal.sweeps, "Reverse-order passes; stops early when one changes nothing");

  // evaluate
  std::string test_path;
  auto *eva = app.add_subcommand("evaluate", "Test-set LPPD of a sample file");
  eva->add_option("--samples", samples_path)->required();
  eva->add_option("--arch", arch_path)->required();
  eva->add_option("--test", test_path)->required();
  eva->add_option("--out", out_path);

  // kl-track
  std::string grid_out;
  GridOptions grid;
  auto *klt = app.add_subcommand("kl-track", "KL divergence between consecutive PPD estimates");
  klt->add_option("--samples", samples_path)->required();
  klt->add_option("--arch", arch_path)->required();
  klt->add_option("--out", out_path)->required();
  klt->add_option("--grid-out", grid_out, "Also dump the final PPD grid as CSV");
  grid.add(klt);

  // cluster
  int clusters = 3, knn = 4;
  auto *clu = app.add_subcommand("cluster", "Spectral clustering of (canonicalized) samples");
  clu->add_option("--samples", samples_path)->required();
  clu->add_option("--clusters", clusters);
  clu->add_option("--knn", knn);
  clu->add_option("--seed", seed);
  clu->add_option("--out", out_path)->required();

  // map / ensemble
  MapConfig map_config;
  int members = 10;
  auto *mapc = app.add_subcommand("map", "Maximum a posteriori estimate");
  auto *ens = app.add_subcommand("ensemble", "Deep ensemble of MAP estimates");
  for (auto *c : {mapc, ens}) {
    c->add_option("--arch", arch_path)->required();
    c->add_option("--data", data_path)->required();
    c->add_option("--seed", seed);
    c->add_option("--steps", map_config.steps);
    c->add_option("--lr", map_config.learning_rate);
    c->add_option("--test", test_path, "Report test LPPD");
    c->add_option("--out", out_path, "Parameter-state CSV")->required();
  }
  ens->add_option("--members", members);

  // pipeline
  auto *pipe = app.add_subcommand("pipeline", "End-to-end run from an experiment config");
  pipe->add_option("--config", config_path)->required();

  std::vector<std::string> argv_store{"symbnn"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char *> argv;
  for (auto &a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError &e) {
    err << json{{"error", {{"stage", "cli"}, {"cause", e.what()}}}}.dump() << '\n';
    return 1;
  }

  try {
    set_workers(workers);
    if (gen->parsed()) {
      const json meta = gen_data(kind, n_points, seed, train_frac, spec_path, out_dir, err);
      out << meta.dump(2) << '\n';
      err << "wrote " << out_dir << "/{train,test}.csv (" << meta["n_train"] << "/" << meta["n_test"] << ")\n";
    } else if (smp->parsed()) {
      const Architecture arch = read_arch(arch_path);
      const RegressionData data = load_regression(data_path, arch);
      SamplerConfig config = sampler_config(config_path);
      if (smp->count("--seed") > 0) config.seed = seed;
      if (warmup >= 0) config.warmup_steps = warmup;
      const SampleOutcome o = sample(arch, data, config, chains, draws_per_chain);
      write_samples_csv(out_path, o.samples);
      out << o.summary.dump(2) << '\n';
      err << "sampled " << o.samples.size() << " draws from " << chains << " chains\n";
    } else if (bnd->parsed()) {
      const json j = bound(parse_list(pi_text), target, oracle_trials, seed);
      emit(j, out_path, out);
      err << "E(G) = " << j["expected_chains"] << ", rho = " << j["required_chains"] << '\n';
    } else if (rem->parsed()) {
      const Architecture arch = read_arch(arch_path);
      SampleSet samples = read_samples_csv(samples_path, arch);
      Rng rng(seed);
      const RemovalReport report = geometry_removal(samples, removal, rng);
      write_samples_csv(out_path, samples);
      const json j = report.to_json();
      if (!report_path.empty()) write_text(report_path, j.dump(2) + "\n");
      out << j.dump(2) << '\n';
      err << "canonicalized " << samples.size() << " draws\n";
    } else if (eva->parsed()) {
      const Architecture arch = read_arch(arch_path);
      const SampleSet samples = read_samples_csv(samples_path, arch);
      const RegressionData test = load_regression(test_path, arch);
      const LppdResult r = lppd(samples, test);
      emit(lppd_json(r), out_path, out);
      err << "mean LPPD " << r.mean << " (se " << r.std_error << ")\n";
    } else if (klt->parsed()) {
      const Architecture arch = read_arch(arch_path);
      const SampleSet samples = read_samples_csv(samples_path, arch);
      const GridSpec spec = grid.spec();
      const auto kl = kl_consecutive(samples, spec);
      std::ofstream os(out_path);
      if (!os) throw Error("io", "cannot write " + out_path);
      os << "draw_index,kl\n";
      for (std::size_t i = 0; i < kl.size(); ++i) os << i + 2 << ',' << format_double(kl[i]) << '\n';
      if (!grid_out.empty()) write_grid_csv(grid_out, ppd_grid(samples, spec));
      out << json{{"draws", samples.size()}, {"final_kl", kl.back()}}.dump(2) << '\n';
    } else if (clu->parsed()) {
      ClusterConfig cc;
      cc.clusters = clusters;
      cc.k = knn;
      cc.seed = seed;
      const ClusterResult r = spectral_cluster(read_theta_points(samples_path), cc);
      std::ofstream os(out_path);
      if (!os) throw Error("io", "cannot write " + out_path);
      os << "draw,label\n";
      for (std::size_t i = 0; i < r.labels.size(); ++i) os << i << ',' << r.labels[i] << '\n';
      out << json{{"clusters", clusters}, {"eigenvalues", r.eigenvalues}, {"graph_components", r.components}}.dump(2) << '\n';
      if (r.components > clusters) {
        err << "warning: the k-NN graph has " << r.components << " components for " << clusters
            << " clusters; the partition is not unique\n";
      }
    } else if (mapc->parsed() || ens->parsed()) {
      const Architecture arch = read_arch(arch_path);
      const RegressionData data = load_regression(data_path, arch);
      std::vector<std::uint64_t> seeds;
      const int count = mapc->parsed() ? 1 : members;
      for (int i = 0; i < count; ++i) seeds.push_back(seed + static_cast<std::uint64_t>(i));
      const auto results = deep_ensemble(data, arch, seeds, map_config);
      std::vector<ParamState> states;
      json losses = json::array();
      for (const auto &r : results) {
        states.push_back(r.state);
        losses.push_back(r.loss);
      }
      write_states_csv(out_path, states);
      json j = {{"members", count}, {"loss", losses}};
      if (!test_path.empty()) {
        const LppdResult r = lppd(states_as_samples(arch, states), load_regression(test_path, arch));
        j["mean_lppd"] = r.mean;
        j["se"] = r.std_error;
      }
      out << j.dump(2) << '\n';
    } else if (pipe->parsed()) {
      const ExperimentConfig cfg = ExperimentConfig::from_json(read_json(config_path));
      out << pipeline(cfg, err).dump(2) << '\n';
    }
  } catch (const Error &e) {
    err << json{{"error", {{"stage", e.stage()}, {"cause", e.what()}}}}.dump() << '\n';
    return 1;
  } catch (const std::exception &e) {
    err << json{{"error", {{"stage", "internal"}, {"cause", e.what()}}}}.dump() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace symbnn
