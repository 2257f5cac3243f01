#pragma once

#include <string>
#include <vector>

#include "halp/sphere_geom.hpp"

namespace halp {

// Fixed-capacity FIFO of past key embeddings. Serves the negatives for the
// contrastive loss and the most-recent pool for prototype extraction.
// Single-writer; readers copy out between pushes.
class MemoryQueue {
 public:
  MemoryQueue(int capacity, Eigen::Index dim) : capacity_(capacity), dim_(dim) {
    if (capacity < 1) throw ConfigError("queue capacity must be >= 1");
    if (dim < 2) throw ConfigError("queue dim must be >= 2");
    storage_.reserve(static_cast<std::size_t>(capacity));
  }

  int capacity() const { return capacity_; }
  Eigen::Index dim() const { return dim_; }
  int filled() const { return filled_; }

  // Appends a batch, evicting the oldest entries once full.
  void push(const std::vector<UnitVector>& batch) {
    if (batch.size() > static_cast<std::size_t>(capacity_)) {
      throw BatchTooLargeError("batch of " + std::to_string(batch.size()) +
                               " exceeds capacity " + std::to_string(capacity_));
    }
    for (const UnitVector& v : batch) {
      if (v.dim() != dim_) throw DimMismatchError("queue entry dim mismatch");
    }
    for (const UnitVector& v : batch) {
      if (storage_.size() < static_cast<std::size_t>(capacity_)) {
        storage_.push_back(v);
      } else {
        storage_[static_cast<std::size_t>(write_cursor_)] = v;
      }
      write_cursor_ = (write_cursor_ + 1) % capacity_;
    }
    filled_ = static_cast<int>(storage_.size());
  }

  // The k most recently pushed entries, newest first.
  std::vector<UnitVector> top_k_recent(int k) const {
    if (k < 0 || k > filled_) {
      throw NotEnoughElementsError("requested " + std::to_string(k) +
                                   " of " + std::to_string(filled_) + " entries");
    }
    std::vector<UnitVector> out;
    out.reserve(static_cast<std::size_t>(k));
    int idx = write_cursor_ - 1;
    for (int i = 0; i < k; ++i) {
      if (idx < 0) idx += capacity_;
      out.push_back(storage_[static_cast<std::size_t>(idx)]);
      --idx;
    }
    return out;
  }

  // Snapshot of all filled entries (ring order; deterministic).
  std::vector<UnitVector> negatives() const { return storage_; }

  // Same snapshot packed as columns, for the per-step loss computation.
  Eigen::MatrixXd negatives_matrix() const { return pack_columns(storage_); }

 private:
  int capacity_;
  Eigen::Index dim_;
  std::vector<UnitVector> storage_;
  int write_cursor_ = 0;
  int filled_ = 0;
};

}  // namespace halp
