#pragma once

#include <deque>
#include <stdexcept>
#include <vector>

#include "apac/rng.hpp"
#include "apac/types.hpp"

namespace apac {

/// One experience record: state layout is [end, elbow, target].
struct Transition {
  Vector6d s{Vector6d::Zero()};
  Vector2d a{Vector2d::Zero()};
  double r = 0.0;
  Vector6d s_next{Vector6d::Zero()};
  bool terminal = false;
};

/// Finite FIFO memory with uniform without-replacement sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("capacity must be positive");
  }

  void push(const Transition& t) {
    entries_.push_back(t);
    if (entries_.size() > capacity_) entries_.pop_front();
  }

  std::vector<Transition> sample_batch(std::size_t n, Rng& rng) const {
    if (n > entries_.size())
      throw std::invalid_argument("batch larger than buffer contents");
    std::vector<std::size_t> index(entries_.size());
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
    std::vector<Transition> batch;
    batch.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + rng.below(index.size() - i);
      std::swap(index[i], index[j]);
      batch.push_back(entries_[index[i]]);
    }
    return batch;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<Transition>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<Transition> entries_;
};

// Column-per-sample matrix views of a sampled batch.
inline MatrixXd batch_states(const std::vector<Transition>& batch) {
  MatrixXd m(6, batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) m.col(i) = batch[i].s;
  return m;
}

inline MatrixXd batch_next_states(const std::vector<Transition>& batch) {
  MatrixXd m(6, batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) m.col(i) = batch[i].s_next;
  return m;
}

inline MatrixXd batch_actions(const std::vector<Transition>& batch) {
  MatrixXd m(2, batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) m.col(i) = batch[i].a;
  return m;
}

inline Eigen::RowVectorXd batch_rewards(const std::vector<Transition>& batch) {
  Eigen::RowVectorXd r(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) r(i) = batch[i].r;
  return r;
}

inline Eigen::RowVectorXd batch_nonterminal_mask(
    const std::vector<Transition>& batch) {
  Eigen::RowVectorXd m(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    m(i) = batch[i].terminal ? 0.0 : 1.0;
  return m;
}

}  // namespace apac
