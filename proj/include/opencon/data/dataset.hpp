#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "opencon/core/matrix.hpp"
#include "opencon/core/rng.hpp"

namespace opencon::data {

inline constexpr int kNoLabel = -1;

struct Sample {
  std::int64_t id = 0;
  Vec input;
  int true_class = kNoLabel;  // ground truth; hidden from training when unlabeled
  bool is_labeled = false;
};

struct Dataset {
  std::size_t dim = 0;
  std::vector<Sample> samples;

  // max(true_class) + 1, or 0 when nothing is labeled.
  std::size_t num_classes() const;
};

struct SplitDataset {
  std::size_t dim = 0;
  std::vector<Sample> labeled;    // D_l
  std::vector<Sample> unlabeled;  // D_u
  std::vector<Sample> test;       // optional held-out pool, empty by default
  std::vector<int> known_classes;  // Y_l, always 0..|Y_l|-1
  std::vector<int> novel_classes;  // Y_n = Y_all \ Y_l
  std::vector<int> all_classes;    // Y_all (evaluation only)

  std::size_t num_known() const { return known_classes.size(); }
  std::size_t num_classes() const { return all_classes.size(); }
};

struct SyntheticConfig {
  std::size_t n_classes = 10;
  std::size_t per_class = 500;
  std::size_t ambient_dim = 32;
  double kappa = 30.0;
  // Class means are resampled until every pairwise cosine is <= this bound.
  double max_mean_cosine = 0.5;
};

struct SyntheticDataset {
  Dataset dataset;
  std::vector<Vec> class_means;
};

// Class-balanced vMF mixture with means uniform on the sphere. Samples are
// shuffled; ids are the post-shuffle positions.
SyntheticDataset generate_synthetic(const SyntheticConfig& config, Rng& rng);

struct SplitConfig {
  double known_fraction = 0.5;
  double labeling_ratio = 0.5;
  // Fraction of the unlabeled pool moved to a held-out test set.
  double holdout_fraction = 0.0;
};

// The first floor(known_fraction * C) class ids become Y_l; floor(labeling_ratio
// * n_c) samples of each known class go to D_l, everything else to D_u.
// Samples without a label always land in D_u.
SplitDataset make_split(const Dataset& dataset, const SplitConfig& config, Rng& rng);

}  // namespace opencon::data
