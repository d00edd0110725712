#pragma once

#include <cstddef>
#include <vector>

#include "hebbdqn/error.hpp"
#include "hebbdqn/preprocess.hpp"
#include "hebbdqn/rng.hpp"

namespace hebbdqn::replay {

inline constexpr std::size_t kDefaultCapacity = 50000;

struct Experience {
  preprocess::StateRef state;
  std::size_t action = 0;
  double reward = 0.0;
  preprocess::StateRef next_state;
  bool terminated = false;
  bool truncated = false;
};

// Fixed-capacity FIFO ring. Pushing into a full buffer overwrites the oldest
// element; sampling is uniform with replacement over the current contents.
template <typename T = Experience>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {
    if (capacity == 0) Fail(ErrorKind::kValidation, "replay capacity must be positive");
    storage_.reserve(std::min<std::size_t>(capacity, 1024));
  }

  void Push(T item) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(item));
    } else {
      storage_[head_] = std::move(item);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::vector<T> Sample(std::size_t batch, Rng& rng) const {
    if (batch == 0) Fail(ErrorKind::kUsage, "sample batch must be positive");
    if (storage_.size() < batch) {
      Fail(ErrorKind::kState, "cannot sample " + std::to_string(batch) +
                                  " experiences from a buffer holding " +
                                  std::to_string(storage_.size()));
    }
    std::vector<T> out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) out.push_back(storage_[rng.Index(storage_.size())]);
    return out;
  }

  // i-th element in insertion order, 0 = oldest.
  const T& at(std::size_t i) const {
    if (i >= storage_.size()) Fail(ErrorKind::kUsage, "replay index out of range");
    return storage_[(head_ + i) % storage_.size()];
  }

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return storage_.empty(); }
  void Clear() {
    storage_.clear();
    head_ = 0;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest element once full
  std::vector<T> storage_;
};

}  // namespace hebbdqn::replay
