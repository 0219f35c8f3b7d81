#pragma once

// Exhaustive object generation straight from the parse tree. Independent of
// ClassSystem, the series solver and the sampler; used as the ground truth in
// tests at small sizes.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "combkit/grammar.hpp"

namespace combkit::bruteforce {

using BruteSize = std::map<std::string, std::int64_t>;

struct BruteObject {
  std::string repr;
  BruteSize size;
  std::int64_t total = 0;
};

struct BruteResult {
  /// False when some class kept growing (infinitely many objects of a size).
  bool finite = true;
  std::map<std::string, std::vector<BruteObject>> objects;

  /// Object count per size vector for a class.
  std::map<BruteSize, std::uint64_t> counts(const std::string& cls) const;
  /// Count of objects of one total size (sum over all variables).
  std::uint64_t count_total(const std::string& cls, std::int64_t total) const;
};

/// Every object of total size <= max_total for every class.
BruteResult brute_force(const Specification& spec, std::int64_t max_total, std::size_t object_cap = 200000);

}  // namespace combkit::bruteforce
