#include "combkit/truncated_series.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

#include "combkit/error.hpp"

namespace combkit {

std::uint64_t total_degree(const Exponent& e) noexcept {
  std::uint64_t d = 0;
  for (auto x : e) d += x;
  return d;
}

TruncatedSeries::TruncatedSeries(std::vector<std::string> variables, std::vector<std::uint32_t> bounds)
    : variables_(std::move(variables)), bounds_(std::move(bounds)) {
  if (variables_.size() != bounds_.size())
    throw Error(ErrorCode::BoundsMismatch, "one truncation bound per variable required");
}

TruncatedSeries TruncatedSeries::constant(std::vector<std::string> variables,
                                          std::vector<std::uint32_t> bounds, const mpz_class& c) {
  TruncatedSeries s(std::move(variables), std::move(bounds));
  s.set(Exponent(s.variables_.size(), 0), c);
  return s;
}

TruncatedSeries TruncatedSeries::monomial(std::vector<std::string> variables,
                                          std::vector<std::uint32_t> bounds, const Exponent& e,
                                          const mpz_class& c) {
  TruncatedSeries s(std::move(variables), std::move(bounds));
  s.set(e, c);
  return s;
}

mpz_class TruncatedSeries::coefficient(const Exponent& e) const {
  auto it = coeffs_.find(e);
  return it == coeffs_.end() ? mpz_class(0) : it->second;
}

mpz_class TruncatedSeries::constant_term() const {
  return coefficient(Exponent(variables_.size(), 0));
}

bool TruncatedSeries::in_bounds(const Exponent& e) const noexcept {
  if (e.size() != bounds_.size()) return false;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (e[i] > bounds_[i]) return false;
  return true;
}

void TruncatedSeries::set(const Exponent& e, mpz_class value) {
  if (!in_bounds(e)) return;
  if (value == 0) {
    coeffs_.erase(e);
  } else {
    coeffs_[e] = std::move(value);
  }
}

void TruncatedSeries::add_to(const Exponent& e, const mpz_class& value) {
  if (!in_bounds(e) || value == 0) return;
  auto [it, inserted] = coeffs_.try_emplace(e, value);
  if (!inserted) {
    it->second += value;
    if (it->second == 0) coeffs_.erase(it);
  }
}

std::uint64_t TruncatedSeries::box_degree() const noexcept {
  std::uint64_t d = 0;
  for (auto b : bounds_) d += b;
  return d;
}

bool TruncatedSeries::same_shape(const TruncatedSeries& other) const noexcept {
  return variables_ == other.variables_ && bounds_ == other.bounds_;
}

TruncatedSeries TruncatedSeries::truncated_total(std::uint64_t max_total) const {
  TruncatedSeries out(variables_, bounds_);
  for (const auto& [e, c] : coeffs_)
    if (total_degree(e) <= max_total) out.coeffs_.emplace_hint(out.coeffs_.end(), e, c);
  return out;
}

namespace {

void require_same_shape(const TruncatedSeries& a, const TruncatedSeries& b) {
  if (!a.same_shape(b))
    throw Error(ErrorCode::BoundsMismatch, "series operands have different variables or bounds");
}

// Mixed-radix layout for exponent sums of two in-box exponents: digit i
// ranges over [0, 2*bound_i], so adding two encoded indices never carries.
struct SumLayout {
  std::vector<std::uint64_t> radix;
  std::vector<std::uint64_t> stride;
  std::uint64_t slots = 1;
  bool fits = true;
};

SumLayout sum_layout(const std::vector<std::uint32_t>& bounds) {
  constexpr std::uint64_t kMaxSlots = std::uint64_t{1} << 26;
  SumLayout l;
  for (auto b : bounds) {
    const std::uint64_t r = 2 * std::uint64_t{b} + 1;
    l.radix.push_back(r);
    l.stride.push_back(l.slots);
    if (l.slots > kMaxSlots / r) {
      l.fits = false;
      return l;
    }
    l.slots *= r;
  }
  return l;
}

std::uint64_t encode(const Exponent& e, const SumLayout& l) {
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < e.size(); ++i) idx += e[i] * l.stride[i];
  return idx;
}

Exponent decode(std::uint64_t idx, const SumLayout& l) {
  Exponent e(l.radix.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = static_cast<std::uint32_t>(idx % l.radix[i]);
    idx /= l.radix[i];
  }
  return e;
}

struct PackedTerm {
  std::uint64_t index;
  const mpz_class* value;
};

mpz_class pack(const std::vector<PackedTerm>& terms, std::size_t limbs) {
  mpz_class out;
  if (terms.empty()) return out;
  std::uint64_t top = 0;
  for (const auto& t : terms) top = std::max(top, t.index);
  const std::size_t n = static_cast<std::size_t>(top + 1) * limbs;
  mp_limb_t* dst = mpz_limbs_write(out.get_mpz_t(), static_cast<mp_size_t>(n));
  std::memset(dst, 0, n * sizeof(mp_limb_t));
  for (const auto& t : terms) {
    const mpz_srcptr v = t.value->get_mpz_t();
    const std::size_t sz = mpz_size(v);
    std::memcpy(dst + t.index * limbs, mpz_limbs_read(v), sz * sizeof(mp_limb_t));
  }
  mpz_limbs_finish(out.get_mpz_t(), static_cast<mp_size_t>(n));
  return out;
}

template <class Sink>
void unpack(const mpz_class& packed, std::size_t limbs, Sink&& sink) {
  const mpz_srcptr p = packed.get_mpz_t();
  const std::size_t total = mpz_size(p);
  const mp_limb_t* src = mpz_limbs_read(p);
  mpz_class slot;
  for (std::size_t base = 0, idx = 0; base < total; base += limbs, ++idx) {
    std::size_t n = std::min(limbs, total - base);
    while (n > 0 && src[base + n - 1] == 0) --n;
    if (n == 0) continue;
    mp_limb_t* dst = mpz_limbs_write(slot.get_mpz_t(), static_cast<mp_size_t>(n));
    std::memcpy(dst, src + base, n * sizeof(mp_limb_t));
    mpz_limbs_finish(slot.get_mpz_t(), static_cast<mp_size_t>(n));
    sink(static_cast<std::uint64_t>(idx), slot);
  }
}

std::size_t bit_length(std::size_t v) {
  std::size_t b = 0;
  while (v) {
    ++b;
    v >>= 1;
  }
  return b;
}

// Kronecker substitution: every coefficient gets a fixed-width limb slot in
// one big integer, so the whole truncated product is a single GMP multiply.
// Signed inputs are split into positive and negative parts.
TruncatedSeries mul_kronecker(const TruncatedSeries& a, const TruncatedSeries& b, const SumLayout& layout,
                              std::uint64_t cap) {
  std::vector<PackedTerm> ap, an, bp, bn;
  std::vector<mpz_class> abs_storage;
  abs_storage.reserve(a.term_count() + b.term_count());
  std::size_t abits = 0, bbits = 0;
  auto split = [&](const TruncatedSeries& s, std::vector<PackedTerm>& pos, std::vector<PackedTerm>& neg,
                   std::size_t& bits) {
    for (const auto& [e, c] : s.coefficients()) {
      bits = std::max(bits, mpz_sizeinbase(c.get_mpz_t(), 2));
      if (sgn(c) > 0) {
        pos.push_back({encode(e, layout), &c});
      } else {
        abs_storage.push_back(abs(c));
        neg.push_back({encode(e, layout), &abs_storage.back()});
      }
    }
  };
  split(a, ap, an, abits);
  split(b, bp, bn, bbits);
  const std::size_t count = std::min(a.term_count(), b.term_count());
  const std::size_t bits = abits + bbits + bit_length(count) + 2;
  const std::size_t limbs = (bits + GMP_NUMB_BITS - 1) / GMP_NUMB_BITS;

  TruncatedSeries out(a.variables(), a.bounds());
  auto accumulate = [&](const std::vector<PackedTerm>& x, const std::vector<PackedTerm>& y, bool negate) {
    if (x.empty() || y.empty()) return;
    const mpz_class prod = pack(x, limbs) * pack(y, limbs);
    unpack(prod, limbs, [&](std::uint64_t idx, const mpz_class& v) {
      const Exponent e = decode(idx, layout);
      if (!out.in_bounds(e) || total_degree(e) > cap) return;
      out.add_to(e, negate ? mpz_class(-v) : v);
    });
  };
  accumulate(ap, bp, false);
  accumulate(an, bn, false);
  accumulate(ap, bn, true);
  accumulate(an, bp, true);
  return out;
}

TruncatedSeries mul_schoolbook(const TruncatedSeries& a, const TruncatedSeries& b, std::uint64_t cap) {
  TruncatedSeries out(a.variables(), a.bounds());
  const auto& bounds = a.bounds();
  Exponent e(bounds.size());
  for (const auto& [ea, ca] : a.coefficients()) {
    const std::uint64_t da = total_degree(ea);
    if (da > cap) continue;
    for (const auto& [eb, cb] : b.coefficients()) {
      if (da + total_degree(eb) > cap) continue;
      bool inside = true;
      for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] = ea[i] + eb[i];
        if (e[i] > bounds[i]) {
          inside = false;
          break;
        }
      }
      if (inside) out.add_to(e, ca * cb);
    }
  }
  return out;
}

}  // namespace

TruncatedSeries series_add(const TruncatedSeries& a, const TruncatedSeries& b) {
  require_same_shape(a, b);
  TruncatedSeries out = a;
  for (const auto& [e, c] : b.coefficients()) out.add_to(e, c);
  return out;
}

TruncatedSeries series_negate(const TruncatedSeries& a) {
  TruncatedSeries out(a.variables(), a.bounds());
  for (const auto& [e, c] : a.coefficients()) out.set(e, -c);
  return out;
}

TruncatedSeries series_sub(const TruncatedSeries& a, const TruncatedSeries& b) {
  require_same_shape(a, b);
  TruncatedSeries out = a;
  for (const auto& [e, c] : b.coefficients()) out.add_to(e, -c);
  return out;
}

TruncatedSeries series_mul(const TruncatedSeries& a, const TruncatedSeries& b,
                           std::optional<std::uint64_t> max_total) {
  require_same_shape(a, b);
  const std::uint64_t cap = max_total.value_or(std::numeric_limits<std::uint64_t>::max());
  if (a.is_zero() || b.is_zero()) return TruncatedSeries(a.variables(), a.bounds());
  constexpr std::size_t kKroneckerThreshold = 24;
  if (std::min(a.term_count(), b.term_count()) >= kKroneckerThreshold) {
    const SumLayout layout = sum_layout(a.bounds());
    if (layout.fits) return mul_kronecker(a, b, layout, cap);
  }
  return mul_schoolbook(a, b, cap);
}

TruncatedSeries series_inverse(const TruncatedSeries& a, std::optional<std::uint64_t> max_total) {
  const mpz_class c0 = a.constant_term();
  if (c0 != 1 && c0 != -1)
    throw Error(ErrorCode::ConstantTermNonzero, "series inverse needs constant term +1 or -1");
  const std::uint64_t target = std::min(max_total.value_or(a.box_degree()), a.box_degree());
  const Exponent zero(a.variables().size(), 0);
  TruncatedSeries g = TruncatedSeries::constant(a.variables(), a.bounds(), c0);
  const TruncatedSeries one = TruncatedSeries::constant(a.variables(), a.bounds(), 1);
  // g is exact below total degree k; each step doubles k.
  for (std::uint64_t k = 1; k <= target; k *= 2) {
    const std::uint64_t cap = std::min(target, 2 * k - 1);
    const TruncatedSeries err = series_sub(one, series_mul(a, g, cap));
    g = series_add(g, series_mul(g, err, cap));
  }
  return g.truncated_total(target);
}

TruncatedSeries series_quasi_inverse(const TruncatedSeries& a) {
  if (a.constant_term() != 0)
    throw Error(ErrorCode::ConstantTermNonzero, "quasi-inverse operand has a size-0 object");
  const TruncatedSeries one = TruncatedSeries::constant(a.variables(), a.bounds(), 1);
  return series_inverse(series_sub(one, a));
}

}  // namespace combkit
