#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace idecomp {

using Element = std::size_t;

class PosetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an enumeration (lower sets, state spaces) would exceed its cap.
class SizeGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultMaxLowerSets = 4096;

/// A downward-closed subset of a finite poset, stored as a membership mask.
class LowerSet {
 public:
  LowerSet() = default;
  explicit LowerSet(std::vector<bool> mask) : mask_(std::move(mask)) {}

  static LowerSet empty(std::size_t universe) { return LowerSet(std::vector<bool>(universe, false)); }

  std::size_t universe() const { return mask_.size(); }
  bool contains(Element e) const { return e < mask_.size() && mask_[e]; }
  const std::vector<bool>& mask() const { return mask_; }

  std::size_t size() const { return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true)); }
  bool is_empty() const { return size() == 0; }

  std::vector<Element> members() const {
    std::vector<Element> out;
    for (Element e = 0; e < mask_.size(); ++e)
      if (mask_[e]) out.push_back(e);
    return out;
  }

  bool subset_of(const LowerSet& other) const {
    for (Element e = 0; e < mask_.size(); ++e)
      if (mask_[e] && !other.contains(e)) return false;
    return true;
  }

  LowerSet intersect(const LowerSet& other) const {
    std::vector<bool> m(mask_.size());
    for (Element e = 0; e < mask_.size(); ++e) m[e] = mask_[e] && other.contains(e);
    return LowerSet(std::move(m));
  }

  LowerSet unite(const LowerSet& other) const {
    std::vector<bool> m(mask_.size());
    for (Element e = 0; e < mask_.size(); ++e) m[e] = mask_[e] || other.contains(e);
    return LowerSet(std::move(m));
  }

  friend bool operator==(const LowerSet&, const LowerSet&) = default;

 private:
  std::vector<bool> mask_;
};

/// Finite partial order over string-identified elements.
///
/// The order is stored as its reflexive-transitive closure in a dense n x n
/// matrix. Construction accepts any acyclic relation (usually covering pairs)
/// and rejects cycles. Instances are immutable.
class Poset {
 public:
  Poset() = default;

  /// Builds the order generated by `relations`, each pair (lower, upper)
  /// meaning lower <= upper.
  static Poset from_relation(std::vector<std::string> ids,
                             const std::vector<std::pair<std::string, std::string>>& relations) {
    Poset p;
    p.ids_ = std::move(ids);
    const std::size_t n = p.ids_.size();
    for (Element i = 0; i < n; ++i) {
      if (!p.index_.emplace(p.ids_[i], i).second) throw PosetError("duplicate element id '" + p.ids_[i] + "'");
    }
    p.leq_.assign(n * n, 0);
    for (Element i = 0; i < n; ++i) p.leq_[i * n + i] = 1;
    for (const auto& [lo, hi] : relations) p.leq_[p.index_of(lo) * n + p.index_of(hi)] = 1;
    // Floyd-Warshall style transitive closure.
    for (Element k = 0; k < n; ++k)
      for (Element i = 0; i < n; ++i)
        if (p.leq_[i * n + k])
          for (Element j = 0; j < n; ++j)
            if (p.leq_[k * n + j]) p.leq_[i * n + j] = 1;
    for (Element i = 0; i < n; ++i)
      for (Element j = i + 1; j < n; ++j)
        if (p.leq_[i * n + j] && p.leq_[j * n + i])
          throw PosetError("relation has a cycle through '" + p.ids_[i] + "' and '" + p.ids_[j] + "'");
    return p;
  }

  static Poset from_relation(std::vector<std::string> ids, const std::vector<std::pair<Element, Element>>& relations) {
    std::vector<std::pair<std::string, std::string>> named;
    named.reserve(relations.size());
    for (const auto& [lo, hi] : relations) named.emplace_back(ids.at(lo), ids.at(hi));
    return from_relation(std::move(ids), named);
  }

  static Poset chain(std::size_t n) {
    std::vector<std::string> ids;
    std::vector<std::pair<Element, Element>> rel;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back(std::to_string(i));
      if (i > 0) rel.emplace_back(i - 1, i);
    }
    return from_relation(std::move(ids), rel);
  }

  static Poset antichain(std::vector<std::string> ids) { return from_relation(std::move(ids), std::vector<std::pair<Element, Element>>{}); }

  /// Power set of `items` ordered by inclusion. Element index i is the subset
  /// whose bitmask is i (bit k set iff items[k] is a member).
  static Poset power_set(const std::vector<std::string>& items) {
    const std::size_t k = items.size();
    if (k > 20) throw SizeGuardError("power set of more than 20 items");
    const std::size_t n = std::size_t{1} << k;
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t mask = 0; mask < n; ++mask) ids.push_back(subset_label(items, mask));
    std::vector<std::pair<Element, Element>> covers;
    for (std::size_t mask = 0; mask < n; ++mask)
      for (std::size_t bit = 0; bit < k; ++bit)
        if (!(mask & (std::size_t{1} << bit))) covers.emplace_back(mask, mask | (std::size_t{1} << bit));
    return from_relation(std::move(ids), covers);
  }

  static std::string subset_label(const std::vector<std::string>& items, std::size_t mask) {
    std::string s = "{";
    bool first = true;
    for (std::size_t bit = 0; bit < items.size(); ++bit) {
      if (!(mask & (std::size_t{1} << bit))) continue;
      if (!first) s += ",";
      s += items[bit];
      first = false;
    }
    return s + "}";
  }

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(Element e) const { return ids_.at(e); }

  bool has(const std::string& id) const { return index_.count(id) != 0; }
  Element index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw PosetError("unknown element id '" + id + "'");
    return it->second;
  }

  bool leq(Element a, Element b) const { return leq_[a * size() + b] != 0; }
  bool less(Element a, Element b) const { return a != b && leq(a, b); }
  bool comparable(Element a, Element b) const { return leq(a, b) || leq(b, a); }

  /// b covers a: a < b with nothing strictly between.
  bool covers(Element b, Element a) const {
    if (!less(a, b)) return false;
    for (Element c = 0; c < size(); ++c)
      if (less(a, c) && less(c, b)) return false;
    return true;
  }

  std::vector<std::pair<Element, Element>> cover_pairs() const {
    std::vector<std::pair<Element, Element>> out;
    for (Element a = 0; a < size(); ++a)
      for (Element b = 0; b < size(); ++b)
        if (covers(b, a)) out.emplace_back(a, b);
    return out;
  }

  /// {b : b <= a}
  LowerSet lower_set(Element a) const {
    check(a);
    std::vector<bool> m(size());
    for (Element b = 0; b < size(); ++b) m[b] = leq(b, a);
    return LowerSet(std::move(m));
  }
  LowerSet lower_set(const std::string& id) const { return lower_set(index_of(id)); }

  /// Lower-set closure of an arbitrary subset.
  LowerSet lower_closure(const std::vector<Element>& subset) const {
    std::vector<bool> m(size(), false);
    for (Element a : subset) {
      check(a);
      for (Element b = 0; b < size(); ++b)
        if (leq(b, a)) m[b] = true;
    }
    return LowerSet(std::move(m));
  }

  bool is_lower_set(const LowerSet& s) const {
    if (s.universe() != size()) return false;
    for (Element b = 0; b < size(); ++b)
      if (s.contains(b))
        for (Element c = 0; c < size(); ++c)
          if (leq(c, b) && !s.contains(c)) return false;
    return true;
  }

  std::vector<Element> strictly_below(Element a) const {
    std::vector<Element> out;
    for (Element b = 0; b < size(); ++b)
      if (less(b, a)) out.push_back(b);
    return out;
  }

  std::vector<Element> maximal_elements() const {
    std::vector<Element> out;
    for (Element a = 0; a < size(); ++a) {
      bool maximal = true;
      for (Element b = 0; b < size() && maximal; ++b) maximal = !less(a, b);
      if (maximal) out.push_back(a);
    }
    return out;
  }

  /// Topological order (b < a implies b first); ties broken by id.
  std::vector<Element> linear_extension() const {
    const std::size_t n = size();
    std::vector<std::size_t> pending(n, 0);
    for (Element a = 0; a < n; ++a) pending[a] = strictly_below(a).size();
    auto by_id = [this](Element x, Element y) { return ids_[x] > ids_[y]; };
    std::priority_queue<Element, std::vector<Element>, decltype(by_id)> ready(by_id);
    for (Element a = 0; a < n; ++a)
      if (pending[a] == 0) ready.push(a);
    std::vector<Element> order;
    order.reserve(n);
    while (!ready.empty()) {
      Element a = ready.top();
      ready.pop();
      order.push_back(a);
      for (Element b = 0; b < n; ++b)
        if (less(a, b) && --pending[b] == 0) ready.push(b);
    }
    return order;
  }

  /// Incidence-algebra Moebius function over exact integers. Entry
  /// (a * n + b) is mu(a, b) for b <= a and 0 otherwise.
  std::vector<std::int64_t> mobius() const {
    const std::size_t n = size();
    std::vector<std::int64_t> mu(n * n, 0);
    const auto order = linear_extension();
    for (Element a = 0; a < n; ++a) {
      mu[a * n + a] = 1;
      // mu(a,b) = -sum_{b < c <= a} mu(a,c); visit b from the top down.
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Element b = *it;
        if (!less(b, a)) continue;
        std::int64_t sum = 0;
        for (Element c = 0; c < n; ++c)
          if (less(b, c) && leq(c, a)) sum += mu[a * n + c];
        mu[a * n + b] = -sum;
      }
    }
    return mu;
  }

  /// Greatest-lower-bound table when every pair has a meet.
  std::optional<std::vector<Element>> meet_table() const {
    const std::size_t n = size();
    std::vector<Element> meet(n * n);
    for (Element a = 0; a < n; ++a) {
      for (Element b = 0; b < n; ++b) {
        std::optional<Element> glb;
        for (Element d = 0; d < n; ++d) {
          if (!(leq(d, a) && leq(d, b))) continue;
          bool greatest = true;
          for (Element c = 0; c < n && greatest; ++c)
            if (leq(c, a) && leq(c, b) && !leq(c, d)) greatest = false;
          if (greatest) {
            glb = d;
            break;
          }
        }
        if (!glb) return std::nullopt;
        meet[a * n + b] = *glb;
      }
    }
    return meet;
  }

  bool is_meet_semilattice() const { return meet_table().has_value(); }

  /// Calls `visit` on each lower set contained in `within`, in a
  /// deterministic order. Throws SizeGuardError past `cap` lower sets.
  void for_each_lower_set(const LowerSet& within, const std::function<void(const LowerSet&)>& visit,
                          std::size_t cap = kDefaultMaxLowerSets) const {
    std::vector<Element> order;
    for (Element e : linear_extension())
      if (within.contains(e)) order.push_back(e);
    std::vector<bool> mask(size(), false);
    std::size_t count = 0;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == order.size()) {
        if (++count > cap)
          throw SizeGuardError("lower-set enumeration exceeds cap of " + std::to_string(cap));
        visit(LowerSet(mask));
        return;
      }
      const Element e = order[i];
      rec(i + 1);
      bool allowed = true;
      for (Element b = 0; b < size() && allowed; ++b)
        if (less(b, e) && !mask[b]) allowed = false;
      if (allowed) {
        mask[e] = true;
        rec(i + 1);
        mask[e] = false;
      }
    };
    rec(0);
  }

  std::vector<LowerSet> lower_sets(std::size_t cap = kDefaultMaxLowerSets) const {
    std::vector<LowerSet> out;
    LowerSet all(std::vector<bool>(size(), true));
    for_each_lower_set(all, [&](const LowerSet& s) { out.push_back(s); }, cap);
    return out;
  }

  /// Sub-poset on the given elements, ids preserved, in the given order.
  Poset restrict_to(const std::vector<Element>& elems) const {
    std::vector<std::string> ids;
    std::vector<std::pair<Element, Element>> rel;
    for (Element e : elems) ids.push_back(ids_.at(e));
    for (std::size_t i = 0; i < elems.size(); ++i)
      for (std::size_t j = 0; j < elems.size(); ++j)
        if (i != j && leq(elems[i], elems[j])) rel.emplace_back(i, j);
    return from_relation(std::move(ids), rel);
  }

 private:
  void check(Element a) const {
    if (a >= size()) throw PosetError("element index " + std::to_string(a) + " out of range");
  }

  std::vector<std::string> ids_;
  std::unordered_map<std::string, Element> index_;
  std::vector<std::uint8_t> leq_;
};

/// The poset with a fresh maximal element adjoined (index base.size()).
struct PosetPlus {
  Poset poset;
  Element top = 0;
};

inline PosetPlus extend_plus(const Poset& base) {
  std::string top_id = "1";
  while (base.has(top_id)) top_id += "'";
  std::vector<std::string> ids = base.ids();
  ids.push_back(top_id);
  const Element top = base.size();
  std::vector<std::pair<Element, Element>> rel;
  for (Element a = 0; a < base.size(); ++a) {
    rel.emplace_back(a, top);
    for (Element b = 0; b < base.size(); ++b)
      if (base.less(a, b)) rel.emplace_back(a, b);
  }
  return {Poset::from_relation(std::move(ids), rel), top};
}

/// Pairs (alpha, a) with a <= alpha, ordered componentwise.
class PosetA1 {
 public:
  struct Pair {
    Element alpha;
    Element a;
    friend bool operator==(const Pair&, const Pair&) = default;
  };

  explicit PosetA1(Poset base) : base_(std::move(base)) {
    const Poset& b = base_;
    for (Element alpha = 0; alpha < b.size(); ++alpha)
      for (Element a = 0; a < b.size(); ++a)
        if (b.leq(a, alpha)) pairs_.push_back({alpha, a});
  }

  const std::vector<Pair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool leq(const Pair& lo, const Pair& hi) const { return base_.leq(lo.alpha, hi.alpha) && base_.leq(lo.a, hi.a); }
  const Poset& base() const { return base_; }

 private:
  Poset base_;
  std::vector<Pair> pairs_;
};

inline PosetA1 extend_a1(const Poset& base) { return PosetA1(base); }

/// Pairs (alpha, B) with B a lower set contained in the principal lower set
/// of alpha. Enumerated on demand; the pair count can be exponential.
class PosetA2 {
 public:
  struct Pair {
    Element alpha;
    LowerSet lower;
  };

  PosetA2(Poset base, std::size_t cap) : base_(std::move(base)), cap_(cap) {}

  bool leq(const Pair& lo, const Pair& hi) const { return base_.leq(lo.alpha, hi.alpha) && lo.lower.subset_of(hi.lower); }

  bool is_member(const Pair& p) const { return base_.is_lower_set(p.lower) && p.lower.subset_of(base_.lower_set(p.alpha)); }

  /// Visits every pair. The lower-set count below each alpha is capped.
  void for_each(const std::function<void(const Pair&)>& visit) const {
    for (Element alpha = 0; alpha < base_.size(); ++alpha)
      base_.for_each_lower_set(base_.lower_set(alpha), [&](const LowerSet& s) { visit({alpha, s}); }, cap_);
  }

  std::vector<Pair> enumerate() const {
    std::vector<Pair> out;
    for_each([&](const Pair& p) { out.push_back(p); });
    return out;
  }

  const Poset& base() const { return base_; }

 private:
  Poset base_;
  std::size_t cap_;
};

inline PosetA2 extend_a2(const Poset& base, std::size_t cap = kDefaultMaxLowerSets) {
  // Eagerly validates the size guard on the full lower-set lattice.
  std::size_t count = 0;
  base.for_each_lower_set(LowerSet(std::vector<bool>(base.size(), true)), [&](const LowerSet&) { ++count; }, cap);
  return PosetA2(base, cap);
}

}  // namespace idecomp
