#include "brute_force.hpp"

#include <set>

namespace combkit::bruteforce {

namespace {

using Pool = std::map<std::string, std::vector<BruteObject>>;

BruteObject combine(const BruteObject& a, const BruteObject& b) {
  BruteObject out{a.repr + "," + b.repr, a.size, a.total + b.total};
  for (const auto& [v, n] : b.size) out.size[v] += n;
  return out;
}

struct Expander {
  const Pool& pool;
  std::int64_t max_total;
  std::size_t cap;
  bool overflow = false;

  std::vector<BruteObject> expand(const SpecNode& n) {
    switch (n.kind) {
      case NodeKind::Atom: {
        BruteObject o{n.name, {}, 0};
        for (const auto& [v, s] : n.atom_size) {
          o.size[v] += s;
          o.total += s;
        }
        if (o.total > max_total) return {};
        return {o};
      }
      case NodeKind::ClassRef: {
        auto it = pool.find(n.name);
        if (it == pool.end()) return {};
        std::vector<BruteObject> out;
        for (const auto& o : it->second) out.push_back({n.name + "[" + o.repr + "]", o.size, o.total});
        return out;
      }
      case NodeKind::Union: {
        std::vector<BruteObject> out;
        for (std::size_t i = 0; i < n.children.size(); ++i)
          for (auto& o : expand(n.children[i]))
            out.push_back({std::to_string(i) + ":" + o.repr, std::move(o.size), o.total});
        return out;
      }
      case NodeKind::Product: {
        std::vector<BruteObject> acc{BruteObject{}};
        for (const auto& child : n.children) {
          const auto opts = expand(child);
          std::vector<BruteObject> next;
          for (const auto& a : acc)
            for (const auto& b : opts) {
              if (a.total + b.total > max_total) continue;
              next.push_back(combine(a, b));
              if (next.size() > cap) {
                overflow = true;
                return {};
              }
            }
          acc = std::move(next);
        }
        for (auto& o : acc) o.repr = "(" + o.repr + ")";
        return acc;
      }
      case NodeKind::Seq: {
        const auto opts = expand(n.children[0]);
        std::vector<BruteObject> out{BruteObject{"", {}, 0}};
        std::vector<BruteObject> frontier = out;
        // Extend by one element at a time; size-0 elements make this diverge,
        // which the cap catches.
        while (!frontier.empty()) {
          std::vector<BruteObject> next;
          for (const auto& a : frontier)
            for (const auto& b : opts) {
              if (a.total + b.total > max_total) continue;
              next.push_back(a.repr.empty() ? b : combine(a, b));
              if (out.size() + next.size() > cap) {
                overflow = true;
                return {};
              }
            }
          out.insert(out.end(), next.begin(), next.end());
          frontier = std::move(next);
        }
        for (auto& o : out) o.repr = "[" + o.repr + "]";
        return out;
      }
    }
    return {};
  }
};

}  // namespace

std::map<BruteSize, std::uint64_t> BruteResult::counts(const std::string& cls) const {
  std::map<BruteSize, std::uint64_t> out;
  auto it = objects.find(cls);
  if (it == objects.end()) return out;
  for (const auto& o : it->second) {
    BruteSize s;
    for (const auto& [v, n] : o.size)
      if (n) s[v] = n;
    ++out[s];
  }
  return out;
}

std::uint64_t BruteResult::count_total(const std::string& cls, std::int64_t total) const {
  std::uint64_t n = 0;
  auto it = objects.find(cls);
  if (it == objects.end()) return 0;
  for (const auto& o : it->second) n += o.total == total ? 1 : 0;
  return n;
}

BruteResult brute_force(const Specification& spec, std::int64_t max_total, std::size_t object_cap) {
  BruteResult result;
  Pool pool;
  for (const auto& eq : spec.equations) pool[eq.name];
  // Each round can only add objects; a finite well-founded system settles.
  const std::size_t rounds = (spec.equations.size() + 1) * static_cast<std::size_t>(max_total + 2) + 2;
  for (std::size_t round = 0; round <= rounds; ++round) {
    Pool next;
    bool changed = false;
    for (const auto& eq : spec.equations) {
      Expander ex{pool, max_total, object_cap};
      auto objs = ex.expand(eq.rhs);
      if (ex.overflow || objs.size() > object_cap) {
        result.finite = false;
        result.objects = std::move(pool);
        return result;
      }
      std::set<std::string> seen;
      for (const auto& o : objs) seen.insert(o.repr);
      if (seen.size() != objs.size()) {
        // Two derivations with one printed form cannot happen for a
        // well-formed expansion; treat it as divergence to stay safe.
        result.finite = false;
      }
      changed = changed || objs.size() != pool[eq.name].size();
      next[eq.name] = std::move(objs);
    }
    pool = std::move(next);
    if (!changed) {
      result.objects = std::move(pool);
      return result;
    }
  }
  result.finite = false;
  result.objects = std::move(pool);
  return result;
}

}  // namespace combkit::bruteforce
