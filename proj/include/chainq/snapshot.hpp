#pragma once

// On-disk SP snapshot: a directory with the chain, the digest board, the
// SP's forests and its fault set. See docs/formats.md.

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "chainq/challenge.hpp"

namespace chainq {

struct Snapshot {
  std::unique_ptr<Chain> chain;  // stable address: the SP points into it
  DigestBoard board;
  std::unique_ptr<ServiceProvider> sp;
  std::vector<IndexKind> kinds;
  std::string label;
};

void save_snapshot(const std::filesystem::path& dir, const Chain& chain, const ServiceProvider& sp,
                   const DigestBoard& board, const std::vector<IndexKind>& kinds, const std::string& label = {});
Snapshot load_snapshot(const std::filesystem::path& dir);

/// Fixed trees used by the worked examples.
struct Fixture {
  std::unique_ptr<Chain> chain;
  std::unique_ptr<ServiceProvider> sp;
  DigestBoard board;
  /// Node index in the numeric tree of segment 0 for each label
  /// ("Root", "G", "H", "A".."F").
  std::map<std::string, std::uint32_t> labels;
};

/// Fanout 3; Root -> {G, H}, G -> {A, B, C}, H -> {D, E, F}. Variant 'a'
/// places 9 in D, variant 'b' places it in C.
Fixture make_example_fixture(char variant);

/// Leaves 2, 5, 14, 25, 10, 19, 31, 45 of the plain binary tree example.
std::vector<std::uint64_t> binary_example_leaves();
Hash binary_example_leaf_hash(std::uint64_t value);

}  // namespace chainq
