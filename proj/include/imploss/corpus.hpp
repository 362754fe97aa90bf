#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace imploss {

// Sparse feature vector: (index, value) pairs sorted by index.
using SparseVec = std::vector<std::pair<std::uint32_t, double>>;

enum class SourceTag { original, swapped, duplicated };

struct Example {
  SparseVec features;
  int label = 0;
  SourceTag tag = SourceTag::original;

  bool operator==(const Example& other) const = default;
};

struct Dataset {
  std::vector<Example> examples;
  int num_classes = 0;
  int feature_dim = 0;

  std::size_t size() const { return examples.size(); }

  // Throws ValidationError if any invariant is violated.
  void validate() const;
};

// Fixed seed of the hashing featurizer. Changing it invalidates every
// feature file ever written, so it is part of the format.
inline constexpr std::uint64_t kFeatureHashSeed = 0xCBF29CE484222325ULL;

inline constexpr std::uint32_t kDefaultFeatureDim = 1u << 14;

// Hash one token to a bucket in [0, dim). FNV-1a over the raw bytes.
std::uint32_t hash_token(const std::string& token, std::uint32_t dim);

// Lowercase, split on non-alphanumeric ASCII runs, hash tokens to buckets,
// count, then scale to unit L2 norm. Empty text yields the empty map.
SparseVec featurize(const std::string& text, std::uint32_t dim);

enum class FileFormat { jsonl, tsv };

struct LoadOptions {
  std::optional<int> num_classes;    // default: 1 + max observed label
  std::uint32_t feature_dim = kDefaultFeatureDim;  // used for text records
};

Dataset load_dataset(const std::string& path, FileFormat format,
                     const LoadOptions& opts = {});

// jsonl writer; load_dataset(jsonl) on the output reproduces the dataset.
void save_dataset(const Dataset& ds, const std::string& path);

// Seeded uniform shuffle then contiguous slicing; the parts partition the
// input. Fractions must each lie in (0,1) and sum to 1 within 1e-9.
std::vector<Dataset> split(const Dataset& ds, const std::vector<double>& fractions,
                           std::uint64_t seed);

}  // namespace imploss
