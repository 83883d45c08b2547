#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "signdet/error.hpp"
#include "signdet/random.hpp"

namespace signdet {

/// Items are opaque references (usually file paths), grouped by class name.
using ClassItems = std::map<std::string, std::vector<std::string>>;

struct DatasetSplit {
  ClassItems train;
  ClassItems validation;
  std::uint64_t seed = 0;
  double ratio = 0.8;
  std::vector<std::string> warnings;

  std::size_t train_count() const {
    std::size_t n = 0;
    for (const auto& [_, v] : train) n += v.size();
    return n;
  }
  std::size_t validation_count() const {
    std::size_t n = 0;
    for (const auto& [_, v] : validation) n += v.size();
    return n;
  }
};

inline std::size_t train_share(std::size_t n, double ratio) {
  auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  if (n >= 2 && k == 0) k = 1;
  if (n == 1) k = 1;
  return k;
}

/// Stratified split: each class is shuffled with its own stream derived
/// from (seed, class name), so adding a class never disturbs the others.
inline DatasetSplit split_dataset(const ClassItems& items, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorKind::InvalidInput, "split ratio must lie in (0,1)");
  DatasetSplit out;
  out.seed = seed;
  out.ratio = ratio;
  for (const auto& [cls, list] : items) {
    if (list.empty()) fail(ErrorKind::ValidationError, "class \"" + cls + "\" has no items");
    std::vector<std::string> shuffled = list;
    Rng rng(mix_seed(seed, fnv1a(cls)));
    rng.shuffle(shuffled);
    const std::size_t k = train_share(shuffled.size(), ratio);
    if (shuffled.size() == 1) out.warnings.push_back("class \"" + cls + "\" has a single item; validation is empty");
    out.train[cls].assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(k));
    out.validation[cls].assign(shuffled.begin() + static_cast<std::ptrdiff_t>(k), shuffled.end());
  }
  return out;
}

}  // namespace signdet
