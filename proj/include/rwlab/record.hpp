#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rwlab/format.hpp"
#include "rwlab/rng.hpp"
#include "rwlab/stats.hpp"

namespace rwlab {

// One emitted number with the (seed, replicas, operation) that produced it.
struct RecordedValue {
  std::string name;
  double value = 0.0;
  double stderr_ = 0.0;
  std::string operation;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
};

class ValueLog {
 public:
  void add(std::string name, double value, std::string operation, std::uint64_t seed, std::size_t replicas,
           double stderr_ = 0.0) {
    values_.push_back({std::move(name), value, stderr_, std::move(operation), seed, replicas});
  }
  void add(std::string name, const Estimate& e, std::string operation, std::uint64_t seed) {
    add(std::move(name), e.mean, std::move(operation), seed, e.n, e.stderr_);
  }

  const std::vector<RecordedValue>& values() const { return values_; }
  std::vector<RecordedValue> take() { return std::move(values_); }

 private:
  std::vector<RecordedValue> values_;
};

// Named sub-stream of a master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view role) { return splitmix64(seed ^ fnv1a(role)); }

}  // namespace rwlab
