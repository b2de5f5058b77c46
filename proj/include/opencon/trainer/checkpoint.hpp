#pragma once

#include <cstdint>
#include <string>

#include "opencon/trainer/trainer.hpp"

namespace opencon::trainer {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian): "OCKP", u32 version, u32 input/hidden/output widths,
// u32 prototype rows, u32 known rows, u64 next epoch, f64 parameters
// (w1, b1, w2, b2), f64 velocity in the same order, f64 prototypes, u64
// assignment counts, then the data and augment RNG states as length-prefixed
// text.
void save_checkpoint(const std::string& path, const TrainState& state);

// Throws IoError, Corrupt (bad magic, truncation, trailing bytes) or
// VersionMismatch.
TrainState load_checkpoint(const std::string& path);

// ShapeMismatch when the checkpoint does not fit the config and split.
void check_compatible(const TrainState& state, const TrainConfig& config, const data::SplitDataset& split);

}  // namespace opencon::trainer
