#include "psnis/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "psnis/errors.hpp"
#include "psnis/rng.hpp"
#include "psnis/snis.hpp"

namespace psnis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kConvergenceTol = 1e-9;

}  // namespace

std::vector<Eigen::Index> draw_cluster_indices(Eigen::Index pool_size, int n,
                                               const SamplerState& state,
                                               int k, int round,
                                               SampleStream stream) {
  if (pool_size <= 0) {
    throw ModelDegenerate("draw_cluster_samples: cluster " + std::to_string(k) +
                          " has no members");
  }
  if (n < 1) throw InvalidArgument("draw_cluster_samples: n must be >= 1");

  std::vector<Eigen::Index> out;
  if (pool_size <= n) {
    out.resize(static_cast<std::size_t>(pool_size));
    for (Eigen::Index j = 0; j < pool_size; ++j) out[static_cast<std::size_t>(j)] = j;
    return out;
  }
  std::mt19937_64 gen(derive_seed({state.seed, state.patch_index,
                                   static_cast<std::uint64_t>(k),
                                   static_cast<std::uint64_t>(round),
                                   static_cast<std::uint64_t>(stream)}));
  std::uniform_int_distribution<Eigen::Index> pick(0, pool_size - 1);
  out.resize(static_cast<std::size_t>(n));
  for (auto& idx : out) idx = pick(gen);
  return out;
}

std::vector<Patch> draw_cluster_samples(const PriorModel& model, int k, int n,
                                        const SamplerState& state, int round,
                                        SampleStream stream) {
  const ClusterModel& cluster = model.cluster(k);
  const auto idx = draw_cluster_indices(cluster.members().cols(), n, state, k,
                                        round, stream);
  std::vector<Patch> out;
  out.reserve(idx.size());
  for (auto j : idx) out.push_back(Patch{cluster.members().col(j), 0, 0});
  return out;
}

PatchDenoiser::PatchDenoiser(const PriorModel& model, const DenoiseConfig& cfg)
    : model_(model), cfg_(cfg) {
  if (cfg_.n1 < 1 || cfg_.n2 < 1 || cfg_.outer_iters < 1) {
    throw InvalidArgument("PatchDenoiser: n1, n2 and outer_iters must be >= 1");
  }
  if (!(cfg_.epsilon_floor >= 0.0)) {
    throw InvalidArgument("PatchDenoiser: epsilon_floor must be >= 0");
  }
  pools_.reserve(static_cast<std::size_t>(model_.k_count()));
  for (const auto& cluster : model_.clusters()) {
    const Matrix clamped = cluster.members().cwiseMax(cfg_.epsilon_floor);
    Pool pool;
    pool.log_values = clamped.array().log().matrix();
    pool.clamped_sum = clamped.colwise().sum().transpose();
    pool.average = cluster.members().rowwise().mean();
    pools_.push_back(std::move(pool));
  }
}

void PatchDenoiser::check_patch(const NoisyPatch& y) const {
  if (static_cast<int>(y.counts.size()) != model_.dim()) {
    throw InvalidArgument("denoiser: noisy patch has " +
                          std::to_string(y.counts.size()) +
                          " pixels, model expects " +
                          std::to_string(model_.dim()));
  }
}

std::vector<double> PatchDenoiser::log_likelihoods(
    const NoisyPatch& y, int k, std::span<const Eigen::Index> members) const {
  check_patch(y);
  model_.cluster(k);  // range check
  const Pool& pool = pools_[static_cast<std::size_t>(k)];

  const double log_fact = log_factorial_sum(y.counts);
  std::vector<Eigen::Index> nz;
  std::vector<double> nz_counts;
  for (std::size_t i = 0; i < y.counts.size(); ++i) {
    if (y.counts[i] > 0) {
      nz.push_back(static_cast<Eigen::Index>(i));
      nz_counts.push_back(static_cast<double>(y.counts[i]));
    }
  }

  std::vector<double> out(members.size());
  for (std::size_t s = 0; s < members.size(); ++s) {
    const Eigen::Index j = members[s];
    const double* logs = pool.log_values.col(j).data();
    double acc = -pool.clamped_sum[j];
    for (std::size_t t = 0; t < nz.size(); ++t) acc += nz_counts[t] * logs[nz[t]];
    out[s] = acc - log_fact;
  }
  return out;
}

MmseResult PatchDenoiser::nearest_mean_fallback(const NoisyPatch& y) const {
  check_patch(y);
  const Vector yr = y.as_real();
  int best = 0;
  double best_d = kInf;
  for (int k = 0; k < model_.k_count(); ++k) {
    const double d = (yr - model_.cluster(k).mean()).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  MmseResult r;
  r.values = pools_[static_cast<std::size_t>(best)].average;
  r.ess = static_cast<double>(model_.cluster(best).size());
  r.cluster = best;
  r.fallback = true;
  return r;
}

ClusterSelection PatchDenoiser::select_cluster(const NoisyPatch& y,
                                               const Vector& u,
                                               const SamplerState& state,
                                               int round) const {
  check_patch(y);
  if (u.size() != model_.dim()) {
    throw InvalidArgument("select_cluster: u has wrong dimension");
  }
  ClusterSelection sel;
  sel.scores.assign(static_cast<std::size_t>(model_.k_count()), kInf);
  for (int k = 0; k < model_.k_count(); ++k) {
    const Matrix& members = model_.cluster(k).members();
    const auto idx = draw_cluster_indices(members.cols(), cfg_.n2, state, k,
                                          round, SampleStream::kClusterSelection);
    const auto lw = log_likelihoods(y, k, idx);
    if (!has_finite_weight(lw)) continue;
    std::vector<double> sq_err(idx.size());
    for (std::size_t s = 0; s < idx.size(); ++s) {
      sq_err[s] = (u - members.col(idx[s])).squaredNorm();
    }
    sel.scores[static_cast<std::size_t>(k)] =
        snis_estimate<double>(lw, sq_err);
  }

  double best = kInf;
  int best_k = -1;
  for (int k = 0; k < model_.k_count(); ++k) {
    if (sel.scores[static_cast<std::size_t>(k)] < best) {
      best = sel.scores[static_cast<std::size_t>(k)];
      best_k = k;
    }
  }
  if (best_k < 0) {
    sel.cluster = nearest_mean_fallback(y).cluster;
    sel.fallback = true;
  } else {
    sel.cluster = best_k;
  }
  return sel;
}

MmseResult PatchDenoiser::mmse_estimate(const NoisyPatch& y, int k,
                                        const SamplerState& state,
                                        int round) const {
  check_patch(y);
  const Matrix& members = model_.cluster(k).members();
  const auto idx = draw_cluster_indices(members.cols(), cfg_.n1, state, k,
                                        round, SampleStream::kEstimate);
  const auto lw = log_likelihoods(y, k, idx);
  if (!has_finite_weight(lw)) return nearest_mean_fallback(y);

  MmseResult r;
  std::vector<double> w;
  r.values = snis_estimate_columns(lw, members, idx, &w);
  r.ess = effective_sample_size_normalized(w);
  r.cluster = k;
  return r;
}

PatchEstimate PatchDenoiser::denoise(const NoisyPatch& y,
                                     const SamplerState& state) const {
  check_patch(y);
  PatchEstimate est;
  est.row = y.row;
  est.col = y.col;
  Vector u = y.as_real();
  int prev_k = -1;
  for (int round = 1; round <= cfg_.outer_iters; ++round) {
    const ClusterSelection sel = select_cluster(y, u, state, round);
    MmseResult m = mmse_estimate(y, sel.cluster, state, round);
    const bool stable =
        m.cluster == prev_k && (m.values - u).lpNorm<Eigen::Infinity>() < kConvergenceTol;
    est.cluster_history.push_back(m.cluster);
    est.fallback = sel.fallback || m.fallback;
    est.cluster = m.cluster;
    est.ess = m.ess;
    u = std::move(m.values);
    prev_k = est.cluster;
    if (stable) break;
  }
  est.cluster_history.resize(static_cast<std::size_t>(cfg_.outer_iters),
                             est.cluster);
  est.values = std::move(u);
  return est;
}

ClusterSelection select_cluster(const NoisyPatch& y, const Vector& u,
                                const PriorModel& model, int n2,
                                const SamplerState& state, int round,
                                double epsilon_floor) {
  DenoiseConfig cfg;
  cfg.n2 = n2;
  cfg.epsilon_floor = epsilon_floor;
  return PatchDenoiser(model, cfg).select_cluster(y, u, state, round);
}

MmseResult mmse_estimate(const NoisyPatch& y, int k, const PriorModel& model,
                         int n1, const SamplerState& state, int round,
                         double epsilon_floor) {
  DenoiseConfig cfg;
  cfg.n1 = n1;
  cfg.epsilon_floor = epsilon_floor;
  return PatchDenoiser(model, cfg).mmse_estimate(y, k, state, round);
}

PatchEstimate denoise_patch(const NoisyPatch& y, const PriorModel& model,
                            const DenoiseConfig& cfg,
                            const SamplerState& state) {
  return PatchDenoiser(model, cfg).denoise(y, state);
}

}  // namespace psnis
