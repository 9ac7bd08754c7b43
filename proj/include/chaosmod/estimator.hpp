#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "chaosmod/bounds.hpp"
#include "chaosmod/channel.hpp"
#include "chaosmod/common.hpp"
#include "chaosmod/rng.hpp"
#include "chaosmod/system.hpp"

namespace chaosmod {

enum class AnomalyMode { cell_error, threshold };

struct AnomalySettings {
  AnomalyMode mode = AnomalyMode::cell_error;
  double epsilon = 0.0;  // threshold mode only
};

/// Outage predicate. In cell-error mode a trial is anomalous iff the decoded
/// continuity cell differs from the true one; in threshold mode iff
/// |theta_hat - theta| > epsilon.
inline bool anomaly_predicate(std::span<const int> cell_hat,
                              std::span<const int> cell_true, double theta_hat,
                              double theta, const AnomalySettings& settings) {
  switch (settings.mode) {
    case AnomalyMode::cell_error:
      return !std::equal(cell_hat.begin(), cell_hat.end(), cell_true.begin(),
                         cell_true.end());
    case AnomalyMode::threshold:
      return std::abs(theta_hat - theta) > settings.epsilon;
  }
  return false;
}

struct MlOptions {
  std::uint64_t cell_budget = std::uint64_t{1} << 24;
  /// Restrict the search to cells whose first label equals this value.
  /// The first transmitted sample is s_1, which every first-level branch maps
  /// onto the full interval, so the channel signal is invariant to the first
  /// label: without the restriction the likelihood has r exactly tied minima
  /// (one alias per branch). Harness runs pass the true first label, which
  /// then acts as a pilot shared with the receiver.
  std::optional<int> fixed_first_symbol;
};

/// Estimation result. error/cost/anomalous are filled by score_outcome once
/// the ground truth is known; ml_estimate itself only sees the observation.
struct EstimateOutcome {
  double theta_hat = 0.0;
  std::vector<int> cell_hat;
  double residual = 0.0;
  bool anomalous = false;
  double error = std::numeric_limits<double>::quiet_NaN();
  double cost = std::numeric_limits<double>::quiet_NaN();
};

/// Exact ML estimate of the initial state from a noisy channel output of
/// length n. On each continuity cell the signal is affine in theta, so the
/// per-cell minimizer of ||y - u(theta)||^2 is a clipped closed form; the
/// global minimum over all enumerated cells is exact. Cells are visited in
/// lexicographic label order and only a strictly smaller residual replaces
/// the incumbent, so residual ties resolve to the lowest label sequence.
inline EstimateOutcome ml_estimate(const SystemSpec& spec,
                                   const ChannelConfig& cfg,
                                   std::span<const double> y,
                                   const MlOptions& opts = {}) {
  const int n = static_cast<int>(y.size());
  if (n < 1) throw validation_error("ml_estimate: empty observation");
  const int r = spec.alphabet();
  std::uint64_t cells = 1;
  for (int i = 0; i < n; ++i) {
    if (cells > opts.cell_budget / static_cast<std::uint64_t>(r))
      throw resource_error("ml_estimate needs " + std::to_string(r) + "^" +
                           std::to_string(n) + " cells, budget is " +
                           std::to_string(opts.cell_budget));
    cells *= static_cast<std::uint64_t>(r);
  }
  if (opts.fixed_first_symbol &&
      (*opts.fixed_first_symbol < 0 || *opts.fixed_first_symbol >= r))
    throw validation_error("ml_estimate: fixed first label out of range");

  const double amp = std::sqrt(12.0 * cfg.Q);

  // Per-depth DFS state. For a prefix of depth d:
  //   s_d(theta) = a theta + b on the cell, whose left endpoint is w and
  //   width is prob; S_* accumulate the least-squares sufficient statistics
  //   of the coordinates seen so far (A_i = amp*a_i, B_i = amp*(b_i - 1/2)).
  struct Frame {
    double a, b, w, prob;
    double s_aa, s_ay, s_yy;
  };
  std::vector<Frame> stack(static_cast<std::size_t>(n) + 1);
  std::vector<int> sym(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> path(static_cast<std::size_t>(n), 0);
  stack[0] = {1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0};

  double best_resid = std::numeric_limits<double>::infinity();
  double best_theta = 0.0;
  std::vector<int> best_path;

  int depth = 0;
  while (depth >= 0) {
    if (depth == n) {
      const Frame& f = stack[n];
      double theta = f.s_ay / f.s_aa;
      const double hi = f.w + f.prob;
      if (theta < f.w) theta = f.w;
      if (theta > hi) theta = hi;
      const double resid = f.s_yy + theta * (theta * f.s_aa - 2.0 * f.s_ay);
      if (resid < best_resid) {
        best_resid = resid;
        best_theta = theta;
        best_path.assign(path.begin(), path.end());
      }
      --depth;
      continue;
    }
    int& x = sym[depth];
    const int limit =
        (depth == 0 && opts.fixed_first_symbol) ? *opts.fixed_first_symbol + 1
                                                : r;
    if (depth == 0 && opts.fixed_first_symbol && x < *opts.fixed_first_symbol)
      x = *opts.fixed_first_symbol;
    if (x >= limit) {
      x = 0;
      --depth;
      continue;
    }
    const Frame& f = stack[depth];
    const double px = spec.p(x);
    const double Fx = spec.F(x);
    const double a = f.a / px;
    const double b = (f.b - Fx) / px;
    const double A = amp * a;
    const double B = amp * (b - 0.5);
    const double d = y[static_cast<std::size_t>(depth)] - B;
    path[static_cast<std::size_t>(depth)] = x;
    stack[depth + 1] = {a,
                        b,
                        f.w + Fx * f.prob,
                        f.prob * px,
                        f.s_aa + A * A,
                        f.s_ay + A * d,
                        f.s_yy + d * d};
    ++x;
    ++depth;
  }

  EstimateOutcome out;
  out.theta_hat = best_theta;
  out.cell_hat = std::move(best_path);
  out.residual = best_resid;
  return out;
}

/// Fill the truth-dependent fields of an outcome.
template <typename Cost>
inline void score_outcome(EstimateOutcome& outcome, double theta,
                          std::span<const int> cell_true, const Cost& cost,
                          const AnomalySettings& settings) {
  outcome.error = outcome.theta_hat - theta;
  outcome.cost = cost.rho(outcome.error);
  outcome.anomalous = anomaly_predicate(outcome.cell_hat, cell_true,
                                        outcome.theta_hat, theta, settings);
}

/// Parameter-grid description for the supremum scan: `even` evenly spaced
/// values covering [0,1] plus `random` uniform draws (sub-seeded from the
/// master seed), plus any explicit values.
struct ThetaGrid {
  int even = 33;
  int random = 16;
  std::vector<double> explicit_values;
};

inline std::vector<double> make_theta_grid(const ThetaGrid& grid,
                                           std::uint64_t master_seed) {
  if (grid.even < 0 || grid.random < 0)
    throw validation_error("theta grid counts must be >= 0");
  std::vector<double> thetas = grid.explicit_values;
  for (double v : thetas)
    if (!(v >= 0.0 && v <= 1.0))
      throw validation_error("theta grid value outside [0,1]");
  if (grid.even == 1) thetas.push_back(0.5);
  else
    for (int i = 0; i < grid.even; ++i)
      thetas.push_back(static_cast<double>(i) / (grid.even - 1));
  Rng rng(derive_seed(master_seed, SeedTag::theta_grid));
  for (int i = 0; i < grid.random; ++i) thetas.push_back(rng.uniform01());
  if (thetas.empty())
    throw validation_error("theta grid is empty");
  return thetas;
}

struct ExperimentRun {
  SystemSpec spec;
  ChannelConfig cfg;
  int n = 8;
  long trials_per_theta = 1000;
  ThetaGrid grid;
  PowerCost cost{2.0};
  AnomalySettings anomaly;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  std::uint64_t cell_budget = std::uint64_t{1} << 24;
  /// Reveal the true first label to the estimator (see MlOptions).
  bool pilot_first_symbol = true;
};

struct ThetaStat {
  double theta = 0.0;
  long trials = 0;
  long anomalies = 0;
  double anomaly_rate = 0.0;
  double cond_mean_cost = 0.0;  // over non-anomalous trials
  double cond_stderr = 0.0;
  double anom_mean_cost = 0.0;  // over anomalous trials
  double mean_cost = 0.0;       // over all trials
};

/// Aggregated Monte Carlo figure of merit. Conditional statistics are over
/// non-anomalous trials only; worst_theta attains the supremum scan of the
/// per-theta conditional mean cost.
struct MonteCarloReport {
  long trials_total = 0;
  double anomaly_rate = 0.0;
  double anomaly_stderr = 0.0;
  double cond_mean_cost = 0.0;  // pooled over all non-anomalous trials
  double cond_stderr = 0.0;
  double anom_mean_cost = 0.0;
  double uncond_mean_cost = 0.0;
  double worst_theta = 0.0;
  double sup_cond_mean_cost = 0.0;
  std::vector<double> theta_grid;
  std::vector<ThetaStat> per_theta;
};

/// Monte Carlo harness. Trial (i, j) uses the noise sub-seed
/// derive_seed(seed, ml_trial, i, j), so trials are independent and the
/// report is identical for any thread count: results land in per-trial slots
/// and are reduced afterwards in fixed order.
inline MonteCarloReport run_monte_carlo(const ExperimentRun& run) {
  if (run.trials_per_theta < 1)
    throw validation_error("trials per theta must be >= 1");
  if (run.n < 1) throw validation_error("block length n must be >= 1");

  const std::vector<double> thetas = make_theta_grid(run.grid, run.seed);
  const std::size_t n_theta = thetas.size();
  const long trials = run.trials_per_theta;
  const std::size_t total = n_theta * static_cast<std::size_t>(trials);

  // Truth per theta: trajectory, channel input, true cell.
  std::vector<std::vector<double>> inputs(n_theta);
  std::vector<std::vector<int>> cells(n_theta);
  for (std::size_t i = 0; i < n_theta; ++i) {
    Trajectory traj = iterate(run.spec, thetas[i], run.n);
    inputs[i] = modulate(traj, run.cfg.Q);
    cells[i] = std::move(traj.x);
  }
  {  // validate the budget once up front
    MlOptions probe;
    probe.cell_budget = run.cell_budget;
    std::uint64_t c = 1;
    for (int i = 0; i < run.n; ++i) {
      if (c > probe.cell_budget / static_cast<std::uint64_t>(run.spec.alphabet()))
        throw resource_error("ml sweep exceeds the cell enumeration budget");
      c *= static_cast<std::uint64_t>(run.spec.alphabet());
    }
  }

  std::vector<double> cost_of(total);
  std::vector<std::uint8_t> anom_of(total);

  const auto worker = [&](std::size_t begin, std::size_t end) {
    std::vector<double> y(static_cast<std::size_t>(run.n));
    for (std::size_t idx = begin; idx < end; ++idx) {
      const std::size_t ti = idx / static_cast<std::size_t>(trials);
      const std::size_t j = idx % static_cast<std::size_t>(trials);
      Rng noise(derive_seed(run.seed, SeedTag::ml_trial,
                            static_cast<std::uint64_t>(ti),
                            static_cast<std::uint64_t>(j)));
      const double sigma = run.cfg.sigma();
      const std::vector<double>& u = inputs[ti];
      for (int t = 0; t < run.n; ++t)
        y[static_cast<std::size_t>(t)] =
            u[static_cast<std::size_t>(t)] + noise.gaussian(sigma);
      MlOptions opts;
      opts.cell_budget = run.cell_budget;
      if (run.pilot_first_symbol) opts.fixed_first_symbol = cells[ti][0];
      EstimateOutcome out = ml_estimate(run.spec, run.cfg, y, opts);
      score_outcome(out, thetas[ti], cells[ti], run.cost, run.anomaly);
      cost_of[idx] = out.cost;
      anom_of[idx] = out.anomalous ? 1 : 0;
    }
  };

  unsigned hw = run.threads > 0 ? static_cast<unsigned>(run.threads)
                                : std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (hw > 1 && total > 1) {
    std::vector<std::thread> pool;
    const std::size_t chunk = (total + hw - 1) / hw;
    for (unsigned t = 0; t < hw; ++t) {
      const std::size_t b = std::min(total, t * chunk);
      const std::size_t e = std::min(total, b + chunk);
      if (b < e) pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  } else {
    worker(0, total);
  }

  // Fixed-order reduction.
  MonteCarloReport rep;
  rep.theta_grid = thetas;
  rep.trials_total = static_cast<long>(total);
  rep.per_theta.resize(n_theta);
  detail::KahanSum pooled_ok, pooled_ok2, pooled_anom, pooled_all;
  long pooled_ok_count = 0, pooled_anom_count = 0;
  double sup_cond = -1.0;
  for (std::size_t ti = 0; ti < n_theta; ++ti) {
    ThetaStat& st = rep.per_theta[ti];
    st.theta = thetas[ti];
    st.trials = trials;
    detail::KahanSum ok_sum, ok_sq, an_sum, all_sum;
    long ok_count = 0;
    for (long j = 0; j < trials; ++j) {
      const std::size_t idx =
          ti * static_cast<std::size_t>(trials) + static_cast<std::size_t>(j);
      const double c = cost_of[idx];
      all_sum.add(c);
      pooled_all.add(c);
      if (anom_of[idx]) {
        ++st.anomalies;
        an_sum.add(c);
        pooled_anom.add(c);
        ++pooled_anom_count;
      } else {
        ++ok_count;
        ok_sum.add(c);
        ok_sq.add(c * c);
        pooled_ok.add(c);
        pooled_ok2.add(c * c);
        ++pooled_ok_count;
      }
    }
    st.anomaly_rate =
        static_cast<double>(st.anomalies) / static_cast<double>(trials);
    st.mean_cost = all_sum.value() / static_cast<double>(trials);
    if (ok_count > 0) {
      st.cond_mean_cost = ok_sum.value() / static_cast<double>(ok_count);
      if (ok_count > 1) {
        const double var =
            (ok_sq.value() -
             static_cast<double>(ok_count) * st.cond_mean_cost *
                 st.cond_mean_cost) /
            static_cast<double>(ok_count - 1);
        st.cond_stderr =
            std::sqrt(std::max(0.0, var) / static_cast<double>(ok_count));
      }
    }
    if (st.anomalies > 0)
      st.anom_mean_cost = an_sum.value() / static_cast<double>(st.anomalies);
    if (ok_count > 0 && st.cond_mean_cost > sup_cond) {
      sup_cond = st.cond_mean_cost;
      rep.sup_cond_mean_cost = st.cond_mean_cost;
      rep.worst_theta = st.theta;
    }
  }
  const double N = static_cast<double>(total);
  rep.anomaly_rate = static_cast<double>(pooled_anom_count) / N;
  rep.anomaly_stderr =
      std::sqrt(rep.anomaly_rate * (1.0 - rep.anomaly_rate) / N);
  if (pooled_ok_count > 0) {
    rep.cond_mean_cost =
        pooled_ok.value() / static_cast<double>(pooled_ok_count);
    if (pooled_ok_count > 1) {
      const double var =
          (pooled_ok2.value() -
           static_cast<double>(pooled_ok_count) * rep.cond_mean_cost *
               rep.cond_mean_cost) /
          static_cast<double>(pooled_ok_count - 1);
      rep.cond_stderr = std::sqrt(std::max(0.0, var) /
                                  static_cast<double>(pooled_ok_count));
    }
  }
  if (pooled_anom_count > 0)
    rep.anom_mean_cost =
        pooled_anom.value() / static_cast<double>(pooled_anom_count);
  rep.uncond_mean_cost = pooled_all.value() / N;
  return rep;
}

}  // namespace chaosmod
