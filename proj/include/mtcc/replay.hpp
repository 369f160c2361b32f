#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mtcc/rng.hpp"

namespace mtcc {

// FIFO experience store with uniform sampling. Every item carries a tag
// (the caller encodes step and episode in it) so that old experience can be
// pruned selectively.
template <class T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  }

  void push(T item, std::uint64_t tag) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back({tag, std::move(item)});
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const T& at(std::size_t i) const { return items_[i].second; }
  std::uint64_t tag(std::size_t i) const { return items_[i].first; }

  // n indices drawn uniformly with replacement.
  std::vector<std::size_t> sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw std::logic_error("sampling from an empty replay buffer");
    std::vector<std::size_t> out(n);
    for (auto& i : out) i = rng.below(items_.size());
    return out;
  }

  // Removes every item whose tag satisfies `drop`; returns the count removed.
  std::size_t prune(const std::function<bool(std::uint64_t)>& drop) {
    const auto before = items_.size();
    std::erase_if(items_, [&](const auto& e) { return drop(e.first); });
    return before - items_.size();
  }

  void clear() { items_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<std::pair<std::uint64_t, T>> items_;
};

// Binary sum tree over a fixed number of leaves. Internal nodes are recomputed
// from their children on every update, so totals never drift.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity = 1);

  std::size_t capacity() const { return capacity_; }
  void set(std::size_t i, double priority);
  double get(std::size_t i) const { return nodes_[leaves_ + i]; }
  double total() const { return nodes_[1]; }
  // Leaf whose cumulative interval contains u, for u in [0, total()).
  std::size_t find(double u) const;
  void clear();

 private:
  std::size_t capacity_;
  std::size_t leaves_;
  std::vector<double> nodes_;
};

// Position of a transition inside its reward chain: the T communication
// intervals of one control interval of one agent.
struct ChainPos {
  std::uint64_t chain = 0;
  int t = 0;
  int T = 1;
};

// Reward-backpropagation prioritized replay. The reward-bearing transition
// (t = T-1) enters with priority beta; each time the elevated transition is
// sampled its priority moves to the t-1 transition of the same chain. After
// t = 0 a new round starts at t = T-1 with priority max(1, p * decay), so the
// round priorities run beta, beta*decay, ... down to 1.
//
// With prioritized = false every transition has priority 1 and nothing moves.
template <class T>
class RbperBuffer {
 public:
  RbperBuffer(std::size_t capacity, double beta, double decay, bool prioritized = true)
      : capacity_(capacity), beta_(beta), decay_(decay), prioritized_(prioritized), tree_(capacity),
        slots_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  }

  struct Slot {
    T item{};
    std::uint64_t tag = 0;
    ChainPos pos;
    bool used = false;
  };

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool prioritized() const { return prioritized_; }
  const Slot& slot(std::size_t s) const { return slots_[s]; }
  const T& item(std::size_t s) const { return slots_[s].item; }
  double priority(std::size_t s) const { return tree_.get(s); }
  double total_priority() const { return tree_.total(); }

  // Returns the slot written.
  std::size_t push(T item, std::uint64_t tag, ChainPos pos, double priority = 0.0) {
    if (pos.T < 1 || pos.t < 0 || pos.t >= pos.T) throw std::invalid_argument("invalid chain position");
    const std::size_t s = next_;
    next_ = (next_ + 1) % capacity_;
    if (slots_[s].used) evict(s);
    else ++size_;
    slots_[s] = {std::move(item), tag, pos, true};
    auto& chain = chains_[pos.chain];
    if (chain.empty()) chain.assign(pos.T, -1);
    chain[pos.t] = static_cast<long>(s);
    if (priority <= 0.0) priority = (prioritized_ && pos.t == pos.T - 1) ? beta_ : 1.0;
    tree_.set(s, prioritized_ ? std::max(1.0, priority) : 1.0);
    return s;
  }

  // n slots drawn proportionally to priority, with replacement. When
  // `propagate` is set, every distinct slot that was elevated at draw time
  // hands its priority down its chain afterwards.
  std::vector<std::size_t> sample(std::size_t n, Rng& rng, bool propagate = true) {
    if (size_ == 0) throw std::logic_error("sampling from an empty replay buffer");
    std::vector<std::size_t> out(n);
    std::vector<std::pair<std::size_t, double>> elevated;
    for (auto& s : out) {
      s = tree_.find(rng.uniform() * tree_.total());
      const double p = tree_.get(s);
      if (p > 1.0) elevated.push_back({s, p});
    }
    if (propagate && prioritized_) {
      for (const auto& [s, p] : elevated)
        if (tree_.get(s) == p) pass_down(s);
    }
    return out;
  }

  // Moves the elevated priority of slot s one step down its chain.
  void pass_down(std::size_t s) {
    const double p = tree_.get(s);
    if (!(p > 1.0)) return;
    tree_.set(s, 1.0);
    const ChainPos pos = slots_[s].pos;
    const auto it = chains_.find(pos.chain);
    if (it == chains_.end()) return;
    const auto& chain = it->second;
    const long head = chain[pos.T - 1];
    if (pos.t > 0) {
      const long target = chain[pos.t - 1];
      if (target >= 0) tree_.set(static_cast<std::size_t>(target), p);
      else if (head >= 0 && static_cast<std::size_t>(head) != s) tree_.set(static_cast<std::size_t>(head), p);
      return;
    }
    const double next = std::max(1.0, p * decay_);
    if (next > 1.0 && head >= 0) tree_.set(static_cast<std::size_t>(head), next);
  }

  // Removes every transition whose tag satisfies `drop`. Order, priorities
  // and chains of the survivors are kept.
  std::size_t prune(const std::function<bool(std::uint64_t)>& drop) {
    std::vector<std::pair<Slot, double>> keep;
    keep.reserve(size_);
    const std::size_t start = size_ == capacity_ ? next_ : 0;
    std::size_t removed = 0;
    for (std::size_t n = 0; n < capacity_; ++n) {
      const std::size_t s = (start + n) % capacity_;
      if (!slots_[s].used) continue;
      if (drop(slots_[s].tag)) {
        ++removed;
        continue;
      }
      keep.push_back({std::move(slots_[s]), tree_.get(s)});
    }
    clear();
    for (auto& [slot, p] : keep) push(std::move(slot.item), slot.tag, slot.pos, p);
    return removed;
  }

  void clear() {
    for (auto& s : slots_) s = Slot{};
    chains_.clear();
    tree_.clear();
    next_ = 0;
    size_ = 0;
  }

  // Number of slots with priority above 1 in the given chain.
  int elevated_in_chain(std::uint64_t chain) const {
    const auto it = chains_.find(chain);
    if (it == chains_.end()) return 0;
    int n = 0;
    for (long s : it->second)
      if (s >= 0 && tree_.get(static_cast<std::size_t>(s)) > 1.0) ++n;
    return n;
  }
  long chain_slot(std::uint64_t chain, int t) const {
    const auto it = chains_.find(chain);
    return it == chains_.end() ? -1 : it->second[t];
  }

 private:
  void evict(std::size_t s) {
    const ChainPos pos = slots_[s].pos;
    auto it = chains_.find(pos.chain);
    if (it != chains_.end()) {
      if (it->second[pos.t] == static_cast<long>(s)) it->second[pos.t] = -1;
      if (std::all_of(it->second.begin(), it->second.end(), [](long v) { return v < 0; })) chains_.erase(it);
    }
    tree_.set(s, 0.0);
  }

  std::size_t capacity_;
  double beta_;
  double decay_;
  bool prioritized_;
  SumTree tree_;
  std::vector<Slot> slots_;
  std::unordered_map<std::uint64_t, std::vector<long>> chains_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
};

}  // namespace mtcc
