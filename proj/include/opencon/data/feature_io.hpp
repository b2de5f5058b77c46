#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "opencon/data/dataset.hpp"

namespace opencon::data {

enum class FeatureFormat { Csv, Binary };

// Picks Binary for ".ocft", Csv otherwise.
FeatureFormat format_from_path(const std::filesystem::path& path);

// CSV: header "id,label,f0,...,f{m-1}", label -1 for unlabeled.
// Binary (little endian): "OCFT", u32 version=1, u32 n, u32 m, u8 has_labels,
// n*m f32 row-major, then n i32 labels when has_labels.
Dataset read_features(const std::filesystem::path& path, FeatureFormat format);
void write_features(const std::filesystem::path& path, const Dataset& dataset, FeatureFormat format,
                    bool with_labels = true);

Dataset parse_csv(std::string_view text);

}  // namespace opencon::data
