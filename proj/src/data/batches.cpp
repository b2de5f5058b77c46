#include "opencon/data/batches.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "opencon/core/error.hpp"

namespace opencon::data {

MultiViewBatch make_multiview(const std::vector<Sample>& pool, const std::vector<std::size_t>& picks,
                              Origin origin, Rng& augment_rng, const AugmentConfig& config) {
  MultiViewBatch batch;
  batch.origin = origin;
  batch.views.reserve(2 * picks.size());
  for (std::size_t idx : picks) {
    const Sample& s = pool[idx];
    for (int v = 0; v < 2; ++v) {
      View view;
      view.sample_id = s.id;
      view.sample_index = idx;
      view.view = v;
      view.input = augment(s.input, augment_rng, config);
      view.label = origin == Origin::Labeled ? s.true_class : kNoLabel;
      batch.views.push_back(std::move(view));
    }
  }
  return batch;
}

BatchSampler::BatchSampler(const SplitDataset& split, std::size_t b_l, std::size_t b_u)
    : split_(&split), b_l_(b_l), b_u_(b_u) {
  if (b_l > split.labeled.size()) {
    fail(ErrorCode::BatchTooLarge, "b_l=" + std::to_string(b_l) + " > |D_l|=" +
                                       std::to_string(split.labeled.size()));
  }
  if (b_u > split.unlabeled.size()) {
    fail(ErrorCode::BatchTooLarge, "b_u=" + std::to_string(b_u) + " > |D_u|=" +
                                       std::to_string(split.unlabeled.size()));
  }
  if (b_l == 0 && b_u == 0) fail(ErrorCode::InvalidArgument, "both batch sizes are zero");
  perm_l_.resize(split.labeled.size());
  perm_u_.resize(split.unlabeled.size());
  std::iota(perm_l_.begin(), perm_l_.end(), std::size_t{0});
  std::iota(perm_u_.begin(), perm_u_.end(), std::size_t{0});
}

bool BatchSampler::unlabeled_drives() const { return b_u_ > 0 && !perm_u_.empty(); }

std::size_t BatchSampler::steps_per_epoch() const {
  if (unlabeled_drives()) return (perm_u_.size() + b_u_ - 1) / b_u_;
  return (perm_l_.size() + b_l_ - 1) / b_l_;
}

void BatchSampler::begin_epoch(Rng& data_rng) {
  std::iota(perm_l_.begin(), perm_l_.end(), std::size_t{0});
  std::iota(perm_u_.begin(), perm_u_.end(), std::size_t{0});
  data_rng.shuffle(perm_l_.begin(), perm_l_.end());
  data_rng.shuffle(perm_u_.begin(), perm_u_.end());
  cursor_l_ = 0;
  cursor_u_ = 0;
  step_ = 0;
}

std::vector<std::size_t> BatchSampler::take(std::vector<std::size_t>& perm, std::size_t& cursor,
                                            std::size_t n, bool driver, Rng& data_rng) {
  if (n == 0 || perm.empty()) return {};
  if (!driver && cursor + n > perm.size()) {
    data_rng.shuffle(perm.begin(), perm.end());
    cursor = 0;
  }
  const std::size_t end = std::min(cursor + n, perm.size());
  std::vector<std::size_t> out(perm.begin() + static_cast<std::ptrdiff_t>(cursor),
                               perm.begin() + static_cast<std::ptrdiff_t>(end));
  cursor = end;
  return out;
}

std::pair<MultiViewBatch, MultiViewBatch> BatchSampler::next(Rng& data_rng, Rng& augment_rng,
                                                             const AugmentConfig& config) {
  const bool u_drives = unlabeled_drives();
  const auto picks_l = take(perm_l_, cursor_l_, b_l_, !u_drives, data_rng);
  const auto picks_u = take(perm_u_, cursor_u_, b_u_, u_drives, data_rng);
  ++step_;
  return {make_multiview(split_->labeled, picks_l, Origin::Labeled, augment_rng, config),
          make_multiview(split_->unlabeled, picks_u, Origin::Unlabeled, augment_rng, config)};
}

}  // namespace opencon::data
