#include "psnis/prior_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "psnis/errors.hpp"
#include "psnis/parallel.hpp"

namespace psnis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Eigen::Index> label_counts(const std::vector<int>& labels, int k) {
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

Matrix gather_members(const Matrix& patches, const std::vector<int>& labels,
                      int cluster, Eigen::Index count) {
  Matrix out(patches.rows(), count);
  Eigen::Index c = 0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] == cluster) out.col(c++) = patches.col(static_cast<Eigen::Index>(j));
  }
  return out;
}

std::vector<ClusterModel> build_clusters(const TrainingSet& train,
                                         const std::vector<int>& labels,
                                         int k, double ridge_scale,
                                         int workers) {
  const auto counts = label_counts(labels, k);
  std::vector<std::optional<ClusterModel>> built(static_cast<std::size_t>(k));
  parallel_for(static_cast<std::size_t>(k), workers, [&](std::size_t c) {
    Matrix members = gather_members(train.patches, labels, static_cast<int>(c),
                                    counts[c]);
    auto params = estimate_cluster_params(members);
    built[c].emplace(ClusterModel::from_sample(std::move(params.mean),
                                               std::move(params.covariance),
                                               std::move(members),
                                               ridge_scale));
  });
  std::vector<ClusterModel> out;
  out.reserve(built.size());
  for (auto& b : built) out.push_back(std::move(*b));
  return out;
}

/// K x N matrix of log-densities of every training patch under every cluster.
Matrix score_all(const Matrix& patches, const std::vector<ClusterModel>& clusters,
                 int workers) {
  Matrix scores(static_cast<Eigen::Index>(clusters.size()), patches.cols());
  parallel_for(clusters.size(), workers, [&](std::size_t c) {
    scores.row(static_cast<Eigen::Index>(c)) =
        gaussian_logpdf_columns(patches, clusters[c]).transpose();
  });
  return scores;
}

void check_labels(const std::vector<int>& labels, Eigen::Index n, int k) {
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw InvalidArgument("assignment length does not match training set");
  }
  for (int l : labels) {
    if (l < 0 || l >= k) throw InvalidArgument("assignment label out of range");
  }
}

}  // namespace

TrainingSet TrainingSet::from_patches(std::span<const Patch> patches,
                                      int patch_size, int source_count) {
  TrainingSet t;
  t.patch_size = patch_size;
  t.source_count = source_count;
  const Eigen::Index m = static_cast<Eigen::Index>(patch_size) * patch_size;
  t.patches.resize(m, static_cast<Eigen::Index>(patches.size()));
  for (std::size_t j = 0; j < patches.size(); ++j) {
    if (patches[j].values.size() != m) {
      throw InvalidArgument("TrainingSet: patch " + std::to_string(j) +
                            " has wrong dimension");
    }
    t.patches.col(static_cast<Eigen::Index>(j)) = patches[j].values;
  }
  return t;
}

void TrainingSet::validate() const {
  if (patch_size < 1) throw InvalidArgument("TrainingSet: patch_size < 1");
  if (patches.cols() == 0) throw InvalidArgument("TrainingSet: no patches");
  if (patches.rows() != dim()) {
    throw InvalidArgument("TrainingSet: patch rows != patch_size^2");
  }
  if (!patches.allFinite() || (patches.array() < 0.0).any()) {
    throw InvalidArgument("TrainingSet: entries must be finite and >= 0");
  }
}

Assignment kmeans_init(const TrainingSet& train, int k, std::uint64_t seed,
                       int max_iters) {
  train.validate();
  const Eigen::Index n = train.size();
  if (k < 1) throw InvalidArgument("kmeans_init: k must be >= 1");
  if (k > n) {
    throw InvalidArgument("kmeans_init: k = " + std::to_string(k) +
                          " exceeds patch count " + std::to_string(n));
  }
  const Matrix& x = train.patches;
  const Eigen::Index m = x.rows();
  std::mt19937_64 gen(seed);

  // k-means++ seeding.
  Matrix centers(m, k);
  std::uniform_int_distribution<Eigen::Index> pick_first(0, n - 1);
  centers.col(0) = x.col(pick_first(gen));
  Vector d2 = (x.colwise() - centers.col(0)).colwise().squaredNorm().transpose();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      const double target = unit(gen) * total;
      double cum = 0.0;
      chosen = n - 1;
      for (Eigen::Index j = 0; j < n; ++j) {
        cum += d2[j];
        if (cum > target && d2[j] > 0.0) {
          chosen = j;
          break;
        }
      }
    } else {
      chosen = pick_first(gen);
    }
    centers.col(c) = x.col(chosen);
    d2 = d2.cwiseMin(
        (x.colwise() - centers.col(c)).colwise().squaredNorm().transpose());
  }

  // Lloyd iterations.
  const Vector x_norm = x.colwise().squaredNorm().transpose();
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  Vector best_dist(n);
  for (int iter = 0; iter < std::max(max_iters, 1); ++iter) {
    const Vector c_norm = centers.colwise().squaredNorm().transpose();
    const Matrix cross = centers.transpose() * x;  // k x n
    bool changed = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      int best = 0;
      double best_d = kInf;
      for (int c = 0; c < k; ++c) {
        const double d = x_norm[j] + c_norm[c] - 2.0 * cross(c, j);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      best_dist[j] = best_d;
      if (labels[static_cast<std::size_t>(j)] != best) {
        labels[static_cast<std::size_t>(j)] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Matrix sums = Matrix::Zero(m, k);
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      const int l = labels[static_cast<std::size_t>(j)];
      sums.col(l) += x.col(j);
      ++counts[static_cast<std::size_t>(l)];
    }
    for (int c = 0; c < k; ++c) {
      // An emptied centroid keeps its previous position.
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.col(c) = sums.col(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }

  auto counts = label_counts(labels, k);
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    Eigen::Index far = -1;
    double far_d = -kInf;
    for (Eigen::Index j = 0; j < n; ++j) {
      const int l = labels[static_cast<std::size_t>(j)];
      if (counts[static_cast<std::size_t>(l)] > 1 && best_dist[j] > far_d) {
        far_d = best_dist[j];
        far = j;
      }
    }
    --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
    labels[static_cast<std::size_t>(far)] = c;
    counts[static_cast<std::size_t>(c)] = 1;
    best_dist[far] = -kInf;
  }
  return Assignment{std::move(labels)};
}

ClusterParams estimate_cluster_params(const Matrix& members) {
  if (members.cols() == 0) {
    throw InvalidArgument("estimate_cluster_params: no members");
  }
  const Eigen::Index n = members.cols();
  ClusterParams p;
  p.mean = members.rowwise().mean();
  const Matrix centered = members.colwise() - p.mean;
  const double denom = static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  p.covariance = (centered * centered.transpose()) / denom;
  // Exact symmetry; the product is symmetric only up to rounding.
  p.covariance = (0.5 * (p.covariance + p.covariance.transpose())).eval();
  return p;
}

ClusterParams estimate_cluster_params(std::span<const Patch> members) {
  if (members.empty()) {
    throw InvalidArgument("estimate_cluster_params: no members");
  }
  Matrix cols(members.front().values.size(), static_cast<Eigen::Index>(members.size()));
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (members[j].values.size() != cols.rows()) {
      throw InvalidArgument("estimate_cluster_params: dimension mismatch");
    }
    cols.col(static_cast<Eigen::Index>(j)) = members[j].values;
  }
  return estimate_cluster_params(cols);
}

PriorModel run_cem(const TrainingSet& train, const Assignment& initial,
                   const LearnOptions& options, CemTrace* trace) {
  train.validate();
  const int k = options.k;
  const Eigen::Index n = train.size();
  if (k < 1) throw InvalidArgument("run_cem: k must be >= 1");
  if (options.cem_iters < 1) throw InvalidArgument("run_cem: cem_iters must be >= 1");
  check_labels(initial.labels, n, k);
  for (auto c : label_counts(initial.labels, k)) {
    if (c == 0) throw InvalidArgument("run_cem: initial assignment has an empty cluster");
  }

  std::vector<int> labels = initial.labels;
  std::optional<std::vector<ClusterModel>> fixed_clusters;
  if (trace) *trace = CemTrace{};

  for (int round = 0; round < options.cem_iters; ++round) {
    auto clusters = build_clusters(train, labels, k, options.epsilon_ridge,
                                   options.workers);
    const Matrix scores = score_all(train.patches, clusters, options.workers);

    std::vector<int> next(static_cast<std::size_t>(n));
    Vector own(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::Index best = 0;
      scores.col(j).maxCoeff(&best);  // first maximum -> lowest index on ties
      next[static_cast<std::size_t>(j)] = static_cast<int>(best);
      own[j] = scores(best, j);
    }

    auto counts = label_counts(next, k);
    std::size_t repaired = 0;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index worst = -1;
      double worst_ll = kInf;
      for (Eigen::Index j = 0; j < n; ++j) {
        const int l = next[static_cast<std::size_t>(j)];
        if (counts[static_cast<std::size_t>(l)] > 1 && own[j] < worst_ll) {
          worst_ll = own[j];
          worst = j;
        }
      }
      if (worst < 0) {
        throw ModelDegenerate("run_cem: cannot refill an empty cluster");
      }
      --counts[static_cast<std::size_t>(next[static_cast<std::size_t>(worst)])];
      next[static_cast<std::size_t>(worst)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      own[worst] = kInf;  // never picked twice
      ++repaired;
    }

    std::size_t changed = 0;
    double objective = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const int l = next[static_cast<std::size_t>(j)];
      objective += scores(l, j);
      if (l != labels[static_cast<std::size_t>(j)]) ++changed;
    }
    if (trace) {
      trace->objective.push_back(objective);
      trace->changed.push_back(changed);
      trace->repaired.push_back(repaired);
    }
    labels = std::move(next);
    if (changed == 0) {
      if (trace) trace->fixed_point = true;
      fixed_clusters = std::move(clusters);
      break;
    }
  }

  auto clusters = fixed_clusters
                      ? std::move(*fixed_clusters)
                      : build_clusters(train, labels, k, options.epsilon_ridge,
                                       options.workers);
  return PriorModel(std::move(clusters), train.patch_size, options.seed,
                    options.epsilon_ridge);
}

PriorModel learn_prior(const TrainingSet& train, const LearnOptions& options,
                       CemTrace* trace) {
  const Assignment init =
      kmeans_init(train, options.k, options.seed, options.kmeans_max_iters);
  return run_cem(train, init, options, trace);
}

PriorModel learn_prior(const TrainingSet& train, int k, int cem_iters,
                       std::uint64_t seed) {
  LearnOptions options;
  options.k = k;
  options.cem_iters = cem_iters;
  options.seed = seed;
  return learn_prior(train, options);
}

int assign_clean_patch(const Vector& x, const PriorModel& model) {
  if (x.size() != model.dim()) {
    throw InvalidArgument("assign_clean_patch: dimension mismatch");
  }
  int best = 0;
  double best_ll = -kInf;
  for (int c = 0; c < model.k_count(); ++c) {
    const double ll = gaussian_logpdf(x, model.cluster(c));
    if (ll > best_ll) {
      best_ll = ll;
      best = c;
    }
  }
  return best;
}

Assignment assign_all(const TrainingSet& train, const PriorModel& model,
                      int workers) {
  train.validate();
  if (train.dim() != model.dim()) {
    throw InvalidArgument("assign_all: dimension mismatch");
  }
  const Matrix scores = score_all(train.patches, model.clusters(), workers);
  Assignment a;
  a.labels.resize(static_cast<std::size_t>(train.size()));
  for (Eigen::Index j = 0; j < train.size(); ++j) {
    Eigen::Index best = 0;
    scores.col(j).maxCoeff(&best);
    a.labels[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return a;
}

double classification_loglik(const TrainingSet& train,
                             const Assignment& assignment,
                             const PriorModel& model) {
  train.validate();
  check_labels(assignment.labels, train.size(), model.k_count());
  double total = 0.0;
  for (Eigen::Index j = 0; j < train.size(); ++j) {
    total += gaussian_logpdf(train.patches.col(j),
                             model.cluster(assignment.labels[static_cast<std::size_t>(j)]));
  }
  return total;
}

}  // namespace psnis
