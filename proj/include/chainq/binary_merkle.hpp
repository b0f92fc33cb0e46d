#pragma once

// Plain binary Merkle tree (no sum augmentation): parent = H(left || right).
// Kept for compatibility with classic inclusion proofs.

#include <cstdint>
#include <span>
#include <vector>

#include "chainq/hash.hpp"

namespace chainq {

class BinaryMerkle {
 public:
  struct Step {
    Hash sibling;
    bool sibling_on_left = false;
    std::size_t level = 0;  // 0 = leaf level
    std::size_t index = 0;  // sibling's index within its level
  };

  /// Leaf count must be a power of two (>= 1).
  explicit BinaryMerkle(std::vector<Hash> leaves);

  const Hash& root() const { return levels_.back().front(); }
  std::size_t leaf_count() const { return levels_.front().size(); }
  std::size_t height() const { return levels_.size(); }
  const Hash& at(std::size_t level, std::size_t index) const { return levels_.at(level).at(index); }

  /// Sibling path from leaf to root.
  std::vector<Step> prove(std::size_t leaf) const;
  static Hash fold(const Hash& leaf, std::span<const Step> path);
  static bool verify(const Hash& leaf, std::span<const Step> path, const Hash& root) {
    return fold(leaf, path) == root;
  }

  /// Internal nodes numbered 1.. level by level, left to right, from the
  /// level above the leaves up to the root. Returns (level, index).
  std::pair<std::size_t, std::size_t> locate(std::size_t number) const;
  std::size_t number_of(std::size_t level, std::size_t index) const;

 private:
  std::vector<std::vector<Hash>> levels_;
};

}  // namespace chainq
