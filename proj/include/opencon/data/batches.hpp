#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "opencon/core/rng.hpp"
#include "opencon/data/augment.hpp"
#include "opencon/data/dataset.hpp"

namespace opencon::data {

enum class Origin { Labeled, Unlabeled };

struct View {
  std::int64_t sample_id = 0;
  std::size_t sample_index = 0;  // position in the source pool
  int view = 0;                  // 0 or 1
  Vec input;
  int label = kNoLabel;          // ground truth for labeled views only
};

// Views of sample k sit at positions 2k and 2k+1.
struct MultiViewBatch {
  Origin origin = Origin::Labeled;
  std::vector<View> views;

  std::size_t num_samples() const { return views.size() / 2; }
  std::size_t size() const { return views.size(); }
  bool empty() const { return views.empty(); }
};

MultiViewBatch make_multiview(const std::vector<Sample>& pool, const std::vector<std::size_t>& picks,
                              Origin origin, Rng& augment_rng, const AugmentConfig& config);

// Epoch-structured sampler without replacement. The unlabeled pool drives the
// epoch (ceil(|D_u| / b_u) steps, last batch may be short); the labeled pool
// is reshuffled at every epoch start and whenever it runs dry. With b_u == 0
// or an empty D_u the labeled pool drives the epoch instead.
class BatchSampler {
 public:
  BatchSampler(const SplitDataset& split, std::size_t b_l, std::size_t b_u);

  void begin_epoch(Rng& data_rng);
  std::size_t steps_per_epoch() const;
  bool epoch_done() const { return step_ >= steps_per_epoch(); }

  std::pair<MultiViewBatch, MultiViewBatch> next(Rng& data_rng, Rng& augment_rng,
                                                 const AugmentConfig& config);

 private:
  std::vector<std::size_t> take(std::vector<std::size_t>& perm, std::size_t& cursor,
                                std::size_t n, bool driver, Rng& data_rng);
  bool unlabeled_drives() const;

  const SplitDataset* split_;
  std::size_t b_l_;
  std::size_t b_u_;
  std::vector<std::size_t> perm_l_;
  std::vector<std::size_t> perm_u_;
  std::size_t cursor_l_ = 0;
  std::size_t cursor_u_ = 0;
  std::size_t step_ = 0;
};

}  // namespace opencon::data
