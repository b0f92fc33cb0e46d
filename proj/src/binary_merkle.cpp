#include "chainq/binary_merkle.hpp"

#include <bit>

#include "chainq/errors.hpp"

namespace chainq {

BinaryMerkle::BinaryMerkle(std::vector<Hash> leaves) {
  if (leaves.empty() || !std::has_single_bit(leaves.size())) {
    throw BuildError("binary Merkle tree needs a power-of-two leaf count");
  }
  levels_.push_back(std::move(leaves));
  while (levels_.back().size() > 1) {
    const auto& below = levels_.back();
    std::vector<Hash> up(below.size() / 2);
    for (std::size_t i = 0; i < up.size(); ++i) up[i] = hash_pair(below[2 * i], below[2 * i + 1]);
    levels_.push_back(std::move(up));
  }
}

std::vector<BinaryMerkle::Step> BinaryMerkle::prove(std::size_t leaf) const {
  if (leaf >= leaf_count()) throw QueryError("leaf index out of range");
  std::vector<Step> path;
  std::size_t i = leaf;
  for (std::size_t lvl = 0; lvl + 1 < levels_.size(); ++lvl, i /= 2) {
    const std::size_t sib = i ^ 1;
    path.push_back({levels_[lvl][sib], sib < i, lvl, sib});
  }
  return path;
}

Hash BinaryMerkle::fold(const Hash& leaf, std::span<const Step> path) {
  Hash h = leaf;
  for (const Step& s : path) h = s.sibling_on_left ? hash_pair(s.sibling, h) : hash_pair(h, s.sibling);
  return h;
}

std::pair<std::size_t, std::size_t> BinaryMerkle::locate(std::size_t number) const {
  std::size_t n = number;
  for (std::size_t lvl = 1; lvl < levels_.size(); ++lvl) {
    if (n >= 1 && n <= levels_[lvl].size()) return {lvl, n - 1};
    n -= levels_[lvl].size();
  }
  throw QueryError("no internal node with that number");
}

std::size_t BinaryMerkle::number_of(std::size_t level, std::size_t index) const {
  if (level == 0 || level >= levels_.size()) throw QueryError("leaves carry no node number");
  std::size_t n = 0;
  for (std::size_t lvl = 1; lvl < level; ++lvl) n += levels_[lvl].size();
  return n + index + 1;
}

}  // namespace chainq
