#include "ccaudit/replay.hpp"

#include <algorithm>

namespace ccaudit {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_size, int tag_count)
    : capacity_(capacity), obs_size_(obs_size) {
  if (capacity == 0) throw AuditError("replay capacity must be positive");
  if (obs_size < 1) throw AuditError("observation size must be positive");
  if (tag_count < 1) throw AuditError("tag count must be positive");
  const auto width = static_cast<std::size_t>(obs_size);
  obs_.resize(capacity * width);
  next_obs_.resize(capacity * width);
  actions_.resize(capacity);
  rewards_.resize(capacity);
  terminal_.resize(capacity);
  tags_.resize(capacity);
  tag_counts_.assign(static_cast<std::size_t>(tag_count), 0);
}

std::size_t ReplayBuffer::count(int tag) const {
  if (tag < 0 || static_cast<std::size_t>(tag) >= tag_counts_.size()) return 0;
  return tag_counts_[static_cast<std::size_t>(tag)];
}

void ReplayBuffer::push(std::span<const double> obs, int action, double reward,
                        std::span<const double> next_obs, bool terminal, int tag) {
  const auto width = static_cast<std::size_t>(obs_size_);
  if (obs.size() != width || next_obs.size() != width) throw AuditError("replay observation size mismatch");
  if (tag < 0 || static_cast<std::size_t>(tag) >= tag_counts_.size()) throw AuditError("replay tag out of range");
  if (size_ == capacity_) --tag_counts_[static_cast<std::size_t>(tags_[head_])];
  std::copy(obs.begin(), obs.end(), obs_.begin() + static_cast<std::ptrdiff_t>(head_ * width));
  std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + static_cast<std::ptrdiff_t>(head_ * width));
  actions_[head_] = action;
  rewards_[head_] = reward;
  terminal_[head_] = terminal ? 1 : 0;
  tags_[head_] = tag;
  ++tag_counts_[static_cast<std::size_t>(tag)];
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

ReplayItem ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw AuditError("replay index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  const std::size_t slot = (oldest + i) % capacity_;
  const auto width = static_cast<std::size_t>(obs_size_);
  ReplayItem item;
  item.obs.assign(obs_.begin() + static_cast<std::ptrdiff_t>(slot * width),
                  obs_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * width));
  item.next_obs.assign(next_obs_.begin() + static_cast<std::ptrdiff_t>(slot * width),
                       next_obs_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * width));
  item.action = actions_[slot];
  item.reward = rewards_[slot];
  item.terminal = terminal_[slot] != 0;
  item.tag = tags_[slot];
  return item;
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t n, Rng& rng, std::optional<int> tag) const {
  std::vector<std::size_t> out;
  if (size_ == 0) return out;
  if (tag && count(*tag) == 0) return out;
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  out.reserve(n);
  // Rejection sampling: tags are drawn uniformly per episode, so the
  // acceptance rate stays near 1 / tag_count.
  while (out.size() < n) {
    const std::size_t slot = pick(rng);
    if (!tag || tags_[slot] == *tag) out.push_back(slot);
  }
  return out;
}

TdBatch ReplayBuffer::make_batch(const std::vector<std::size_t>& slots) const {
  const auto n = static_cast<Eigen::Index>(slots.size());
  TdBatch b;
  b.obs.resize(obs_size_, n);
  b.next_obs.resize(obs_size_, n);
  b.rewards.resize(n);
  b.not_terminal.resize(n);
  b.actions.resize(slots.size());
  const auto width = static_cast<std::size_t>(obs_size_);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t slot = slots[static_cast<std::size_t>(j)];
    for (int r = 0; r < obs_size_; ++r) {
      b.obs(r, j) = obs_[slot * width + static_cast<std::size_t>(r)];
      b.next_obs(r, j) = next_obs_[slot * width + static_cast<std::size_t>(r)];
    }
    b.actions[static_cast<std::size_t>(j)] = actions_[slot];
    b.rewards(j) = rewards_[slot];
    b.not_terminal(j) = terminal_[slot] ? 0.0 : 1.0;
  }
  return b;
}

double EpsilonSchedule::value(long step) const {
  if (decay_steps <= 0 || step >= decay_steps) return end;
  const double frac = static_cast<double>(std::max(step, 0L)) / static_cast<double>(decay_steps);
  return start + (end - start) * frac;
}

}  // namespace ccaudit
