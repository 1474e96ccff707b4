#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace vrem {

enum class SamplingMode { kWithReplacement, kWithoutReplacement };

const char* to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& text);

// Mixes a base seed with a stream id so independent streams never share state.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class MinibatchSampler {
 public:
  MinibatchSampler(std::size_t n, std::size_t b, SamplingMode mode, std::uint64_t seed);

  // Next batch of b indices in [0, n).
  const std::vector<std::size_t>& next();

  std::size_t population() const noexcept { return n_; }
  std::size_t batch_size() const noexcept { return b_; }
  SamplingMode mode() const noexcept { return mode_; }

 private:
  std::size_t n_;
  std::size_t b_;
  SamplingMode mode_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> batch_;
};

// Every equally likely batch of the given mode: the n^b ordered tuples with
// replacement, the C(n, b) subsets without.
std::vector<std::vector<std::size_t>> enumerate_batches(std::size_t n, std::size_t b,
                                                        SamplingMode mode);

}  // namespace vrem
