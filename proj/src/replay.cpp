#include "mtcc/replay.hpp"

namespace mtcc {

SumTree::SumTree(std::size_t capacity) : capacity_(capacity), leaves_(1) {
  if (capacity == 0) throw std::invalid_argument("sum tree capacity must be positive");
  while (leaves_ < capacity) leaves_ <<= 1;
  nodes_.assign(2 * leaves_, 0.0);
}

void SumTree::set(std::size_t i, double priority) {
  if (i >= capacity_) throw std::out_of_range("sum tree index");
  if (!(priority >= 0.0)) throw std::invalid_argument("priority must be non-negative");
  std::size_t n = leaves_ + i;
  nodes_[n] = priority;
  for (n >>= 1; n >= 1; n >>= 1) nodes_[n] = nodes_[2 * n] + nodes_[2 * n + 1];
}

std::size_t SumTree::find(double u) const {
  if (!(total() > 0.0)) throw std::logic_error("sum tree is empty");
  std::size_t n = 1;
  while (n < leaves_) {
    const double left = nodes_[2 * n];
    if (u < left || nodes_[2 * n + 1] <= 0.0) {
      n = 2 * n;
    } else {
      u -= left;
      n = 2 * n + 1;
    }
  }
  // Rounding can land on a zero leaf at the right edge; step back to the
  // nearest populated one.
  std::size_t i = n - leaves_;
  while (nodes_[leaves_ + i] <= 0.0 && i > 0) --i;
  return i;
}

void SumTree::clear() { std::fill(nodes_.begin(), nodes_.end(), 0.0); }

}  // namespace mtcc
