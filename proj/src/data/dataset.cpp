#include "opencon/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "opencon/core/error.hpp"
#include "opencon/core/numeric.hpp"
#include "opencon/core/vmf.hpp"

namespace opencon::data {

std::size_t Dataset::num_classes() const {
  int max_label = kNoLabel;
  for (const auto& s : samples) max_label = std::max(max_label, s.true_class);
  return static_cast<std::size_t>(max_label + 1);
}

SyntheticDataset generate_synthetic(const SyntheticConfig& config, Rng& rng) {
  if (config.ambient_dim < 2) fail(ErrorCode::InvalidDimension, "ambient_dim must be >= 2");
  if (config.n_classes < 2) fail(ErrorCode::InvalidArgument, "need at least 2 classes");
  if (!(config.kappa > 0.0)) fail(ErrorCode::InvalidArgument, "kappa must be > 0");

  SyntheticDataset out;
  constexpr int kMaxAttempts = 100000;
  while (out.class_means.size() < config.n_classes) {
    int attempts = 0;
    for (;;) {
      Vec candidate = random_unit(config.ambient_dim, rng);
      const bool ok = std::all_of(out.class_means.begin(), out.class_means.end(), [&](const Vec& m) {
        return dot(m, candidate) <= config.max_mean_cosine;
      });
      if (ok) {
        out.class_means.push_back(std::move(candidate));
        break;
      }
      if (++attempts >= kMaxAttempts) {
        fail(ErrorCode::InvalidArgument, "cannot place " + std::to_string(config.n_classes) +
                                             " class means with pairwise cosine <= " +
                                             std::to_string(config.max_mean_cosine));
      }
    }
  }

  auto& samples = out.dataset.samples;
  out.dataset.dim = config.ambient_dim;
  samples.reserve(config.n_classes * config.per_class);
  for (std::size_t c = 0; c < config.n_classes; ++c) {
    const auto draws = sample_vmf({out.class_means[c], config.kappa}, config.per_class, rng);
    for (const auto& x : draws) {
      Sample s;
      s.input = x;
      s.true_class = static_cast<int>(c);
      samples.push_back(std::move(s));
    }
  }
  rng.shuffle(samples.begin(), samples.end());
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i].id = static_cast<std::int64_t>(i);
  return out;
}

namespace {

std::size_t floor_count(double fraction, std::size_t n) {
  // Guards against 0.29 * 100 = 28.999999999999996.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

bool in_unit_interval(double f) { return f > 0.0 && f <= 1.0; }

}  // namespace

SplitDataset make_split(const Dataset& dataset, const SplitConfig& config, Rng& rng) {
  if (!in_unit_interval(config.known_fraction) || !in_unit_interval(config.labeling_ratio)) {
    fail(ErrorCode::InvalidArgument, "known_fraction and labeling_ratio must lie in (0, 1]");
  }
  if (!(config.holdout_fraction >= 0.0 && config.holdout_fraction < 1.0)) {
    fail(ErrorCode::InvalidArgument, "holdout_fraction must lie in [0, 1)");
  }

  SplitDataset split;
  split.dim = dataset.dim;
  const std::size_t n_classes = dataset.num_classes();
  const std::size_t n_known = floor_count(config.known_fraction, n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    split.all_classes.push_back(static_cast<int>(c));
    (c < n_known ? split.known_classes : split.novel_classes).push_back(static_cast<int>(c));
  }

  std::vector<std::vector<std::size_t>> by_class(n_classes);
  std::vector<std::size_t> unlabeled_idx;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const int c = dataset.samples[i].true_class;
    if (c >= 0 && static_cast<std::size_t>(c) < n_known) {
      by_class[static_cast<std::size_t>(c)].push_back(i);
    } else {
      unlabeled_idx.push_back(i);
    }
  }

  for (std::size_t c = 0; c < n_known; ++c) {
    auto& members = by_class[c];
    rng.shuffle(members.begin(), members.end());
    const std::size_t n_lab = floor_count(config.labeling_ratio, members.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (k < n_lab) {
        Sample s = dataset.samples[members[k]];
        s.is_labeled = true;
        split.labeled.push_back(std::move(s));
      } else {
        unlabeled_idx.push_back(members[k]);
      }
    }
  }
  if (split.labeled.empty()) fail(ErrorCode::EmptyLabeledSet, "split leaves D_l empty");

  // Uniform mixing of unlabeled known and novel samples.
  std::sort(unlabeled_idx.begin(), unlabeled_idx.end());
  rng.shuffle(unlabeled_idx.begin(), unlabeled_idx.end());
  const std::size_t n_test = floor_count(config.holdout_fraction, unlabeled_idx.size());
  for (std::size_t k = 0; k < unlabeled_idx.size(); ++k) {
    Sample s = dataset.samples[unlabeled_idx[k]];
    s.is_labeled = false;
    (k < n_test ? split.test : split.unlabeled).push_back(std::move(s));
  }
  return split;
}

}  // namespace opencon::data
