#include "symbnn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace symbnn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct PhasePoint {
  Vector q;
  Vector p;
  Vector grad;
  double log_p = 0.0;
};

// Step-size adaptation toward a target acceptance statistic.
class DualAveraging {
public:
  DualAveraging(const SamplerConfig &c) : delta_(c.target_accept), gamma_(c.gamma), t0_(c.t0), kappa_(c.kappa) {}

  void restart(double step_size) {
    mu_ = std::log(10.0 * step_size);
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }

  double learn(double accept_stat) {
    ++counter_;
    accept_stat = std::min(1.0, accept_stat);
    const double n = static_cast<double>(counter_);
    const double eta = 1.0 / (n + t0_);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(n) / gamma_;
    const double x_eta = std::pow(n, -kappa_);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  double final_step_size() const { return std::exp(x_bar_); }

private:
  double delta_, gamma_, t0_, kappa_;
  double mu_ = 0.0;
  long counter_ = 0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

// Stan-style warmup windows.
class WindowSchedule {
public:
  explicit WindowSchedule(int warmup) : warmup_(warmup) {
    init_buffer_ = 75;
    term_buffer_ = 50;
    base_window_ = 25;
    if (warmup < 20) {
      active_ = false;
      return;
    }
    if (init_buffer_ + base_window_ + term_buffer_ > warmup) {
      init_buffer_ = static_cast<int>(0.15 * warmup);
      term_buffer_ = static_cast<int>(0.1 * warmup);
      base_window_ = warmup - (init_buffer_ + term_buffer_);
    }
    window_size_ = base_window_;
    next_end_ = init_buffer_ + window_size_ - 1;
  }

  bool in_slow_window(int it) const {
    return active_ && it >= init_buffer_ && it < warmup_ - term_buffer_ && it != warmup_;
  }

  // True when iteration `it` closes a slow window; advances the schedule.
  bool end_of_window(int it) {
    if (!active_ || it != next_end_ || it >= warmup_ - term_buffer_) return false;
    window_size_ *= 2;
    int next = it + window_size_;
    const int next_next = next + 2 * window_size_;
    if (next_next >= warmup_ - term_buffer_) next = warmup_ - term_buffer_ - 1;
    next_end_ = next;
    return true;
  }

private:
  int warmup_;
  int init_buffer_ = 0, term_buffer_ = 0, base_window_ = 0;
  int window_size_ = 0;
  int next_end_ = -1;
  bool active_ = true;
};

class Nuts {
public:
  Nuts(const LogDensity &target, const SamplerConfig &config, Rng &rng)
      : target_(target), config_(config), rng_(rng), dim_(static_cast<Eigen::Index>(target.dim())) {
    inv_metric_ = Vector::Ones(dim_);
    step_size_ = config.initial_step_size;
  }

  void evaluate(PhasePoint &z) {
    z.log_p = target_.log_density(z.q, &z.grad);
    ++leapfrogs_;
    if (!std::isfinite(z.log_p) || !z.grad.allFinite()) z.log_p = -kInf;
  }

  double hamiltonian(const PhasePoint &z) const {
    if (z.log_p == -kInf) return kInf;
    return -z.log_p + 0.5 * (z.p.array().square() * inv_metric_.array()).sum();
  }

  void sample_momentum(PhasePoint &z) {
    z.p.resize(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) z.p[i] = normal_(rng_) / std::sqrt(inv_metric_[i]);
  }

  void leapfrog(PhasePoint &z, double eps) {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * inv_metric_.cwiseProduct(z.p);
    evaluate(z);
    if (z.log_p == -kInf) return;
    z.p += 0.5 * eps * z.grad;
  }

  void init_step_size(const PhasePoint &start) {
    if (!(step_size_ > 0.0) || step_size_ > 1e7) return;
    const double log_target = std::log(0.8);
    auto trial = [&]() {
      PhasePoint z = start;
      sample_momentum(z);
      const double h0 = hamiltonian(z);
      leapfrog(z, step_size_);
      double h = hamiltonian(z);
      if (std::isnan(h)) h = kInf;
      return h0 - h;
    };
    const int direction = trial() > log_target ? 1 : -1;
    for (int guard = 0; guard < 200; ++guard) {
      const double delta_h = trial();
      if (direction == 1 && !(delta_h > log_target)) break;
      if (direction == -1 && !(delta_h < log_target)) break;
      step_size_ = direction == 1 ? 2.0 * step_size_ : 0.5 * step_size_;
      if (step_size_ > 1e7 || step_size_ < 1e-300) {
        throw Error("sampler", "step size heuristic diverged");
      }
    }
  }

  struct TransitionStats {
    double accept_stat = 0.0;
    bool divergent = false;
  };

  TransitionStats transition(PhasePoint &z) {
    sample_momentum(z);
    PhasePoint z_fwd = z, z_bck = z, z_sample = z, z_propose = z;

    Vector p_sharp = inv_metric_.cwiseProduct(z.p);
    Vector p_fwd_fwd = z.p, p_sharp_fwd_fwd = p_sharp;
    Vector p_fwd_bck = z.p, p_sharp_fwd_bck = p_sharp;
    Vector p_bck_fwd = z.p, p_sharp_bck_fwd = p_sharp;
    Vector p_bck_bck = z.p, p_sharp_bck_bck = p_sharp;
    Vector rho = z.p;

    double log_sum_weight = 0.0;
    const double h0 = hamiltonian(z);
    long n_leapfrog = 0;
    double sum_metro_prob = 0.0;
    divergent_ = false;

    for (int depth = 0; depth < config_.max_tree_depth;) {
      Vector rho_fwd = Vector::Zero(dim_);
      Vector rho_bck = Vector::Zero(dim_);
      bool valid = false;
      double log_sum_weight_subtree = -kInf;
      PhasePoint cur;
      if (uniform_(rng_) > 0.5) {
        cur = z_fwd;
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        valid = build_tree(depth, cur, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck,
                           p_fwd_fwd, h0, 1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
        z_fwd = cur;
      } else {
        cur = z_bck;
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        valid = build_tree(depth, cur, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd,
                           p_bck_bck, h0, -1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
        z_bck = cur;
      }
      if (!valid) break;
      ++depth;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (uniform_(rng_) < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = criterion(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      Vector rho_ext = rho_bck + p_fwd_bck;
      persist = persist && criterion(p_sharp_bck_bck, p_sharp_fwd_bck, rho_ext);
      rho_ext = rho_fwd + p_bck_fwd;
      persist = persist && criterion(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_ext);
      if (!persist) break;
    }
    z = z_sample;
    TransitionStats stats;
    stats.accept_stat = n_leapfrog > 0 ? sum_metro_prob / static_cast<double>(n_leapfrog) : 0.0;
    stats.divergent = divergent_;
    return stats;
  }

  Vector &inv_metric() { return inv_metric_; }
  double &step_size() { return step_size_; }
  long leapfrogs() const { return leapfrogs_; }

private:
  static bool criterion(const Vector &p_sharp_minus, const Vector &p_sharp_plus, const Vector &rho) {
    return p_sharp_plus.dot(rho) > 0.0 && p_sharp_minus.dot(rho) > 0.0;
  }

  bool build_tree(int depth, PhasePoint &z, PhasePoint &z_propose, Vector &p_sharp_beg,
                  Vector &p_sharp_end, Vector &rho, Vector &p_beg, Vector &p_end, double h0,
                  double sign, long &n_leapfrog, double &log_sum_weight, double &sum_metro_prob) {
    if (depth == 0) {
      leapfrog(z, sign * step_size_);
      ++n_leapfrog;
      double h = hamiltonian(z);
      if (std::isnan(h)) h = kInf;
      if (h - h0 > config_.max_energy_error) divergent_ = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro_prob += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
      z_propose = z;
      p_sharp_beg = inv_metric_.cwiseProduct(z.p);
      p_sharp_end = p_sharp_beg;
      rho += z.p;
      p_beg = z.p;
      p_end = p_beg;
      return !divergent_;
    }

    Vector p_sharp_init_end(dim_), p_init_end(dim_);
    Vector rho_init = Vector::Zero(dim_);
    double log_sum_weight_init = -kInf;
    if (!build_tree(depth - 1, z, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg,
                    p_init_end, h0, sign, n_leapfrog, log_sum_weight_init, sum_metro_prob)) {
      return false;
    }

    PhasePoint z_propose_final = z;
    Vector p_sharp_final_beg(dim_), p_final_beg(dim_);
    Vector rho_final = Vector::Zero(dim_);
    double log_sum_weight_final = -kInf;
    if (!build_tree(depth - 1, z, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final,
                    p_final_beg, p_end, h0, sign, n_leapfrog, log_sum_weight_final, sum_metro_prob)) {
      return false;
    }

    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else if (uniform_(rng_) < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = z_propose_final;
    }

    const Vector rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = criterion(p_sharp_beg, p_sharp_end, rho_subtree);
    Vector rho_ext = rho_init + p_final_beg;
    persist = persist && criterion(p_sharp_beg, p_sharp_final_beg, rho_ext);
    rho_ext = rho_final + p_init_end;
    persist = persist && criterion(p_sharp_init_end, p_sharp_end, rho_ext);
    return persist;
  }

  const LogDensity &target_;
  const SamplerConfig &config_;
  Rng &rng_;
  Eigen::Index dim_;
  Vector inv_metric_;
  double step_size_;
  long leapfrogs_ = 0;
  bool divergent_ = false;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Running variance of warmup draws (Welford).
class VarianceEstimator {
public:
  explicit VarianceEstimator(Eigen::Index dim) : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)) {}

  void add(const Vector &q) {
    ++n_;
    const Vector delta = q - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(q - mean_);
  }

  // Variance shrunk toward 1e-3, as Stan regularizes its diagonal metric.
  Vector regularized() const {
    const double n = static_cast<double>(n_);
    const Vector var = m2_ / (n - 1.0);
    return (n / (n + 5.0)) * var + Vector::Constant(var.size(), 1e-3 * (5.0 / (n + 5.0)));
  }

  void restart() {
    n_ = 0;
    mean_.setZero();
    m2_.setZero();
  }

  long count() const { return n_; }

private:
  long n_ = 0;
  Vector mean_;
  Vector m2_;
};

}  // namespace

void SamplerConfig::validate() const {
  if (warmup_steps < 1) throw Error("sampler", "warmup_steps must be at least 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw Error("sampler", "target_accept must lie in (0, 1)");
  }
  if (!(initial_step_size > 0.0)) throw Error("sampler", "initial step size must be positive");
  if (max_tree_depth < 1) throw Error("sampler", "max_tree_depth must be at least 1");
}

ChainResult sample_chain(const LogDensity &target, const SamplerConfig &config, int n_draws,
                         int chain_id) {
  config.validate();
  if (n_draws < 0) throw Error("sampler", "number of draws must be non-negative");
  Rng rng(config.seed);
  Nuts nuts(target, config, rng);

  PhasePoint z;
  bool found = false;
  for (int attempt = 0; attempt < 100 && !found; ++attempt) {
    z.q = target.initial_point(rng);
    nuts.evaluate(z);
    found = z.log_p != -kInf;
  }
  if (!found) throw Error("sampler", "no finite initial point after 100 attempts");

  ChainResult result;
  result.diag.chain_id = chain_id;
  result.diag.seed = config.seed;

  nuts.init_step_size(z);
  DualAveraging da(config);
  da.restart(nuts.step_size());
  WindowSchedule windows(config.warmup_steps);
  VarianceEstimator var(static_cast<Eigen::Index>(target.dim()));

  for (int it = 0; it < config.warmup_steps; ++it) {
    const auto stats = nuts.transition(z);
    nuts.step_size() = da.learn(stats.accept_stat);
    if (config.adapt_mass_matrix && windows.in_slow_window(it)) {
      var.add(z.q);
      if (windows.end_of_window(it)) {
        if (var.count() > 2) nuts.inv_metric() = var.regularized();
        var.restart();
        nuts.init_step_size(z);
        da.restart(nuts.step_size());
      }
    }
  }
  nuts.step_size() = da.final_step_size();

  double accept_sum = 0.0;
  result.draws.reserve(static_cast<std::size_t>(n_draws));
  for (int it = 0; it < n_draws; ++it) {
    const auto stats = nuts.transition(z);
    accept_sum += stats.accept_stat;
    if (stats.divergent) ++result.diag.divergences;
    if (!z.q.allFinite()) throw Error("sampler", "chain state became non-finite");
    result.draws.push_back(z.q);
  }
  result.diag.mean_accept = n_draws > 0 ? accept_sum / n_draws : 0.0;
  result.diag.step_size = nuts.step_size();
  result.diag.leapfrog_steps = nuts.leapfrogs();
  result.diag.divergence_flag = n_draws > 0 && result.diag.divergences > 0.25 * n_draws;
  result.inv_metric = nuts.inv_metric();
  return result;
}

int RunResult::failed_chains() const {
  return static_cast<int>(std::count_if(chains.begin(), chains.end(),
                                        [](const ChainResult &c) { return c.diag.failed; }));
}

long RunResult::divergences() const {
  long n = 0;
  for (const auto &c : chains) n += c.diag.divergences;
  return n;
}

double RunResult::mean_accept() const {
  double s = 0.0;
  int n = 0;
  for (const auto &c : chains) {
    if (c.diag.failed) continue;
    s += c.diag.mean_accept;
    ++n;
  }
  return n > 0 ? s / n : 0.0;
}

RunResult run_chains(const LogDensity &target, const SamplerConfig &config, int n_chains,
                     int draws_per_chain, Execution exec) {
  if (n_chains < 1) throw Error("sampler", "n_chains must be at least 1");
  config.validate();
  RunResult run;
  run.chains.resize(static_cast<std::size_t>(n_chains));

  auto one_chain = [&](int c) {
    SamplerConfig cc = config;
    cc.seed = config.seed + static_cast<std::uint64_t>(c);
    ChainResult &slot = run.chains[static_cast<std::size_t>(c)];
    try {
      slot = sample_chain(target, cc, draws_per_chain, c);
    } catch (const std::exception &e) {
      slot = ChainResult{};
      slot.diag.chain_id = c;
      slot.diag.seed = cc.seed;
      slot.diag.failed = true;
      slot.diag.error = e.what();
    }
  };

  if (exec == Execution::serial) {
    for (int c = 0; c < n_chains; ++c) one_chain(c);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (int c = 0; c < n_chains; ++c) one_chain(c);
  }

  const int failed = run.failed_chains();
  if (failed > 0.05 * n_chains) {
    std::string first;
    for (const auto &c : run.chains) {
      if (c.diag.failed) {
        first = c.diag.error;
        break;
      }
    }
    throw Error("sampler", std::to_string(failed) + " of " + std::to_string(n_chains) +
                               " chains failed (first: " + first + ")");
  }
  return run;
}

SampleSet collect_samples(const Architecture &arch, const RunResult &run,
                          const SamplerConfig &config) {
  SampleSet set;
  set.arch = arch;
  for (const auto &chain : run.chains) {
    if (chain.diag.failed) continue;
    for (std::size_t i = 0; i < chain.draws.size(); ++i) {
      set.add(ParamState::unpack(chain.draws[i]),
              {chain.diag.chain_id, config.seed + static_cast<std::uint64_t>(chain.diag.chain_id),
               static_cast<int>(i)});
    }
  }
  return set;
}

}  // namespace symbnn
