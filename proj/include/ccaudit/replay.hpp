#pragma once

#include "ccaudit/env_core.hpp"
#include "ccaudit/mlp.hpp"

#include <span>
#include <vector>

namespace ccaudit {

/// One stored experience, already encoded as network input.
struct ReplayItem {
  std::vector<double> obs;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminal = false;
  int tag = 0;
};

/// Fixed-capacity ring buffer of encoded transitions. Each entry carries an
/// integer tag (the feature-subset index for feature-parametrized training,
/// 0 otherwise) so batches can be restricted to one tag.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_size, int tag_count = 1);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  std::size_t count(int tag) const;
  int obs_size() const { return obs_size_; }

  void push(std::span<const double> obs, int action, double reward, std::span<const double> next_obs,
            bool terminal, int tag = 0);

  /// i-th live entry, oldest first.
  ReplayItem at(std::size_t i) const;

  /// Uniform sample (with replacement) of slot indices. With a tag, only
  /// entries carrying that tag are drawn; returns empty when there are none.
  std::vector<std::size_t> sample(std::size_t n, Rng& rng, std::optional<int> tag = std::nullopt) const;
  int tag_of_slot(std::size_t slot) const { return tags_[slot]; }

  TdBatch make_batch(const std::vector<std::size_t>& slots) const;

 private:
  std::size_t capacity_;
  int obs_size_;
  std::size_t head_ = 0;  // next slot to write
  std::size_t size_ = 0;
  std::vector<double> obs_, next_obs_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
  std::vector<char> terminal_;
  std::vector<int> tags_;
  std::vector<std::size_t> tag_counts_;
};

/// Linear decay from `start` to `end` over `decay_steps`, then constant.
struct EpsilonSchedule {
  double start = 0.9;
  double end = 0.01;
  long decay_steps = 100000;

  double value(long step) const;
};

}  // namespace ccaudit
