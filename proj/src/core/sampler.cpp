#include "vrem/sampler.hpp"

#include <numeric>
#include <string>

#include "vrem/errors.hpp"

namespace vrem {

const char* to_string(SamplingMode mode) {
  return mode == SamplingMode::kWithReplacement ? "with-replacement" : "without-replacement";
}

SamplingMode sampling_mode_from_string(const std::string& text) {
  if (text == "with-replacement" || text == "with") return SamplingMode::kWithReplacement;
  if (text == "without-replacement" || text == "without")
    return SamplingMode::kWithoutReplacement;
  throw ArgumentError("unknown sampling mode '" + text + "'");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

MinibatchSampler::MinibatchSampler(std::size_t n, std::size_t b, SamplingMode mode,
                                   std::uint64_t seed)
    : n_(n), b_(b), mode_(mode), rng_(seed) {
  if (n_ == 0) throw ArgumentError("sampler needs n >= 1");
  if (b_ == 0) throw ArgumentError("batch size must be >= 1");
  if (mode_ == SamplingMode::kWithoutReplacement && b_ > n_)
    throw ArgumentError("batch size " + std::to_string(b_) + " exceeds n = " +
                        std::to_string(n_) + " without replacement");
  batch_.resize(b_);
}

const std::vector<std::size_t>& MinibatchSampler::next() {
  if (mode_ == SamplingMode::kWithReplacement) {
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
    for (auto& idx : batch_) idx = pick(rng_);
    return batch_;
  }
  if (perm_.empty()) {
    perm_.resize(n_);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  }
  // partial Fisher-Yates; the leading b slots form a uniform b-subset
  // whatever order perm_ was left in by the previous draw
  for (std::size_t j = 0; j < b_; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, n_ - 1);
    std::swap(perm_[j], perm_[pick(rng_)]);
    batch_[j] = perm_[j];
  }
  return batch_;
}

std::vector<std::vector<std::size_t>> enumerate_batches(std::size_t n, std::size_t b,
                                                        SamplingMode mode) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur(b, 0);
  if (b == 0 || n == 0) return out;
  if (mode == SamplingMode::kWithReplacement) {
    while (true) {
      out.push_back(cur);
      std::size_t pos = b;
      while (pos > 0) {
        --pos;
        if (++cur[pos] < n) break;
        cur[pos] = 0;
        if (pos == 0) return out;
      }
    }
  }
  if (b > n) throw ArgumentError("batch size exceeds n without replacement");
  std::iota(cur.begin(), cur.end(), std::size_t{0});
  while (true) {
    out.push_back(cur);
    std::size_t pos = b;
    while (pos > 0 && cur[pos - 1] == n - b + pos - 1) --pos;
    if (pos == 0) return out;
    ++cur[pos - 1];
    for (std::size_t j = pos; j < b; ++j) cur[j] = cur[j - 1] + 1;
  }
}

}  // namespace vrem
