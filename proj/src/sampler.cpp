#include "combkit/sampler.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>

#include "combkit/error.hpp"

namespace combkit {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t StreamEntropy::attempt_seed(std::uint64_t master, std::uint64_t attempt) noexcept {
  return splitmix64(master + 0x9e3779b97f4a7c15ULL * (attempt + 1));
}

std::uint64_t StreamEntropy::word(std::uint64_t decision, std::uint32_t index) {
  return splitmix64(splitmix64(seed_ ^ splitmix64(decision)) + index);
}

std::uint64_t FixedEntropy::word(std::uint64_t decision, std::uint32_t index) {
  if (decision >= bits_.size())
    throw Error(ErrorCode::EntropyExhausted, "no bits supplied for decision " + std::to_string(decision));
  const std::string& s = bits_[decision];
  const std::size_t first = std::size_t{index} * 64;
  if (first >= s.size() && !(index == 0 && s.empty()))
    throw Error(ErrorCode::EntropyExhausted, "bits of decision " + std::to_string(decision) + " exhausted");
  // Bits past the end of the string read as zero.
  std::uint64_t w = 0;
  for (std::size_t i = 0; i < 64; ++i) {
    w <<= 1;
    if (first + i < s.size()) {
      if (s[first + i] == '1') {
        w |= 1;
      } else if (s[first + i] != '0') {
        throw Error(ErrorCode::EntropyExhausted, "bit strings may only contain 0 and 1");
      }
    }
  }
  return w;
}

RandomReal RandomReal::from_bits(const std::string& bits) {
  FixedEntropy e({bits});
  RandomReal r;
  r.head = e.word(0, 0);
  const auto n = static_cast<std::uint32_t>(bits.size());
  for (std::uint32_t i = 1; i * 64 < n; ++i) r.tail.push_back(e.word(0, i));
  r.bits = n;
  return r;
}

void RandomReal::extend(std::uint32_t count, EntropySource& source, std::uint64_t decision) {
  if (bits == 0 && tail.empty()) head = source.word(decision, 0);
  while (word_count() * 64 < count) tail.push_back(source.word(decision, static_cast<std::uint32_t>(word_count())));
  bits = std::max(bits, count);
}

std::string RandomReal::hex() const {
  static const char digits[] = "0123456789abcdef";
  std::string out;
  const std::uint32_t nibbles = (bits + 3) / 4;
  out.reserve(nibbles);
  for (std::uint32_t i = 0; i < nibbles; ++i) {
    const std::uint64_t w = word(i / 16);
    unsigned v = static_cast<unsigned>((w >> (60 - 4 * (i % 16))) & 0xf);
    const std::uint32_t used = std::min<std::uint32_t>(4, bits - 4 * i);
    v &= 0xfu << (4 - used) & 0xfu;
    out.push_back(digits[v]);
  }
  return out;
}

RandomReal RandomReal::from_hex(const std::string& hex, std::uint32_t bits) {
  if (hex.size() != (bits + 3) / 4)
    throw Error(ErrorCode::InvalidTrace, "hex prefix length does not match its bit count");
  RandomReal r;
  r.bits = bits;
  r.tail.assign(hex.empty() ? 0 : (hex.size() - 1) / 16, 0);
  for (std::size_t i = 0; i < hex.size(); ++i) {
    const char c = hex[i];
    unsigned v;
    if (c >= '0' && c <= '9') {
      v = static_cast<unsigned>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v = static_cast<unsigned>(c - 'a' + 10);
    } else if (c >= 'A' && c <= 'F') {
      v = static_cast<unsigned>(c - 'A' + 10);
    } else {
      throw Error(ErrorCode::InvalidTrace, "invalid hex digit in bit prefix");
    }
    const std::uint64_t shifted = std::uint64_t{v} << (60 - 4 * (i % 16));
    if (i / 16 == 0) {
      r.head |= shifted;
    } else {
      r.tail[i / 16 - 1] |= shifted;
    }
  }
  return r;
}

namespace {

void fill_doubles(ChoiceTable& t) {
  t.lower_d.clear();
  t.upper_d.clear();
  if (t.precision > 53) return;
  for (const auto& x : t.lower) t.lower_d.push_back(x.to_double(MPFR_RNDD));
  for (const auto& x : t.upper) t.upper_d.push_back(x.to_double(MPFR_RNDU));
}

}  // namespace

ChoiceTable ChoiceTable::from_bounds(mpfr_prec_t precision, const std::vector<std::string>& lower,
                                     const std::vector<std::string>& upper) {
  if (lower.size() != upper.size()) throw std::invalid_argument("bound lists differ in length");
  ChoiceTable t;
  t.precision = precision;
  for (std::size_t k = 0; k < lower.size(); ++k) {
    BigFloat l(precision), u(precision);
    mpfr_set_str(l.get(), lower[k].c_str(), 10, MPFR_RNDD);
    mpfr_set_str(u.get(), upper[k].c_str(), 10, MPFR_RNDU);
    t.lower.push_back(std::move(l));
    t.upper.push_back(std::move(u));
  }
  fill_doubles(t);
  return t;
}

std::optional<std::uint32_t> decide(const ChoiceTable& table, const RandomReal& r, std::uint32_t bits) {
  if (bits == 0 || bits > r.word_count() * 64) throw std::invalid_argument("random real has too few bits");
  const std::size_t n = table.size();
  if (bits <= 53 && !table.lower_d.empty()) {
    const double step = std::ldexp(1.0, -static_cast<int>(bits));
    const double t = static_cast<double>(r.head >> (64 - bits)) * step;
    const double th = t + step;
    for (std::size_t k = 0; k < n; ++k) {
      if (th <= table.lower_d[k]) return static_cast<std::uint32_t>(k);
      if (!(t > table.upper_d[k])) return std::nullopt;
    }
    return std::nullopt;
  }
  const std::size_t words = (bits + 63) / 64;
  mpz_class m = 0;
  for (std::size_t i = 0; i < words; ++i) {
    m <<= 64;
    m += mpz_class(static_cast<unsigned long>(r.word(i)));
  }
  m >>= static_cast<mp_bitcnt_t>(words * 64 - bits);
  BigFloat t(static_cast<mpfr_prec_t>(bits) + 1), th(static_cast<mpfr_prec_t>(bits) + 1);
  mpfr_set_z_2exp(t.get(), m.get_mpz_t(), -static_cast<long>(bits), MPFR_RNDN);
  m += 1;
  mpfr_set_z_2exp(th.get(), m.get_mpz_t(), -static_cast<long>(bits), MPFR_RNDN);
  for (std::size_t k = 0; k < n; ++k) {
    if (mpfr_lessequal_p(th.get(), table.lower[k].get())) return static_cast<std::uint32_t>(k);
    if (!mpfr_greater_p(t.get(), table.upper[k].get())) return std::nullopt;
  }
  return std::nullopt;
}

namespace {

void min_one(BigFloat& x) {
  if (mpfr_cmp_ui(x.get(), 1) > 0) mpfr_set_ui(x.get(), 1, MPFR_RNDN);
}

// Appends L_k and U_k from the per-outcome bounds.
void push_cumulative(ChoiceTable& t, const BigFloat& l, const BigFloat& u) {
  BigFloat lo(t.precision), hi(t.precision);
  if (t.lower.empty()) {
    mpfr_set(lo.get(), l.get(), MPFR_RNDD);
    mpfr_set(hi.get(), u.get(), MPFR_RNDU);
  } else {
    mpfr_add(lo.get(), t.lower.back().get(), l.get(), MPFR_RNDD);
    mpfr_add(hi.get(), t.upper.back().get(), u.get(), MPFR_RNDU);
  }
  min_one(hi);
  t.lower.push_back(std::move(lo));
  t.upper.push_back(std::move(hi));
}

}  // namespace

ChoiceTable union_table(std::int32_t node, const std::vector<const Interval*>& children, mpfr_prec_t precision) {
  ChoiceTable t;
  t.kind = NodeKind::Union;
  t.node = node;
  t.precision = precision;
  const std::size_t m = children.size();
  for (std::size_t n = 0; n < m; ++n) {
    BigFloat others_lo(precision), others_hi(precision);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == n) continue;
      mpfr_add(others_lo.get(), others_lo.get(), children[j]->lo.get(), MPFR_RNDD);
      mpfr_add(others_hi.get(), others_hi.get(), children[j]->hi.get(), MPFR_RNDU);
    }
    BigFloat l(precision), u(precision), den(precision);
    mpfr_add(den.get(), children[n]->lo.get(), others_hi.get(), MPFR_RNDU);
    mpfr_div(l.get(), children[n]->lo.get(), den.get(), MPFR_RNDD);
    mpfr_add(den.get(), children[n]->hi.get(), others_lo.get(), MPFR_RNDD);
    mpfr_div(u.get(), children[n]->hi.get(), den.get(), MPFR_RNDU);
    min_one(u);
    push_cumulative(t, l, u);
    t.prob_lower.push_back(std::move(l));
    t.prob_upper.push_back(std::move(u));
  }
  // The probabilities of all children sum to exactly 1.
  if (m > 0) {
    mpfr_set_ui(t.lower.back().get(), 1, MPFR_RNDN);
    mpfr_set_ui(t.upper.back().get(), 1, MPFR_RNDN);
  }
  fill_doubles(t);
  return t;
}

ChoiceTable sequence_table(std::int32_t node, const Interval& operand, mpfr_prec_t precision,
                           std::size_t max_entries) {
  ChoiceTable t;
  t.kind = NodeKind::Seq;
  t.node = node;
  t.precision = precision;
  BigFloat q_lo(precision), q_hi(precision), pow_lo(precision), pow_hi(precision);
  mpfr_ui_sub(q_lo.get(), 1, operand.hi.get(), MPFR_RNDD);
  mpfr_ui_sub(q_hi.get(), 1, operand.lo.get(), MPFR_RNDU);
  mpfr_set_ui(pow_lo.get(), 1, MPFR_RNDN);
  mpfr_set_ui(pow_hi.get(), 1, MPFR_RNDN);
  for (std::size_t k = 0;; ++k) {
    if (k > 0) {
      mpfr_mul(pow_lo.get(), pow_lo.get(), operand.lo.get(), MPFR_RNDD);
      mpfr_mul(pow_hi.get(), pow_hi.get(), operand.hi.get(), MPFR_RNDU);
    }
    BigFloat l(precision), u(precision);
    mpfr_mul(l.get(), q_lo.get(), pow_lo.get(), MPFR_RNDD);
    mpfr_mul(u.get(), q_hi.get(), pow_hi.get(), MPFR_RNDU);
    if (k > 0) {
      // Once U_{k-1} >= L_k, outcome k can never be returned with certainty.
      BigFloat next(precision);
      mpfr_add(next.get(), t.lower.back().get(), l.get(), MPFR_RNDD);
      if (mpfr_greaterequal_p(t.upper.back().get(), next.get())) {
        t.truncated = true;
        break;
      }
    }
    if (t.lower.size() >= max_entries) break;
    push_cumulative(t, l, u);
    t.prob_lower.push_back(std::move(l));
    t.prob_upper.push_back(std::move(u));
  }
  fill_doubles(t);
  return t;
}

CompiledSampler::CompiledSampler(const ClassSystem& system, const GFSystem& gfs, const Point& point,
                                 mpfr_prec_t precision, const OracleOptions& oracle)
    : precision_(precision), values_(eval_system(gfs, point, precision, oracle)) {
  tables_.resize(system.node_count());
  for (const Node& node : system.nodes()) {
    if (node.kind == NodeKind::Union) {
      std::vector<const Interval*> children;
      for (auto c : node.children) children.push_back(&values_.node(c));
      tables_[static_cast<std::size_t>(node.id)] = union_table(node.id, children, precision);
    } else if (node.kind == NodeKind::Seq) {
      tables_[static_cast<std::size_t>(node.id)] =
          sequence_table(node.id, values_.node(node.children.front()), precision);
    }
  }
}

const ChoiceTable& CompiledSampler::table(std::int32_t node) const {
  if (!has_table(node)) throw std::out_of_range("node " + std::to_string(node) + " has no choice table");
  return *tables_[static_cast<std::size_t>(node)];
}

bool CompiledSampler::has_table(std::int32_t node) const {
  return node >= 0 && static_cast<std::size_t>(node) < tables_.size() && tables_[static_cast<std::size_t>(node)];
}

bool AcceptanceWindow::contains(const SizeVector& s) const noexcept {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] < lo[i] || s[i] > hi[i]) return false;
  return true;
}

AcceptanceWindow window_for(const ClassSystem& system, const std::map<std::string, double>& target,
                            double tolerance) {
  if (!(tolerance >= 0) || !std::isfinite(tolerance))
    throw std::invalid_argument("tolerance must be a finite non-negative number");
  const std::size_t nv = system.variable_count();
  AcceptanceWindow w{SizeVector(nv, 0), SizeVector(nv, kUnbounded)};
  for (const auto& [name, n] : target) {
    const auto v = system.variable_index(name);
    if (!v) throw Error(ErrorCode::UnknownVariable, "no variable named '" + name + "'");
    if (!(n >= 0) || !std::isfinite(n)) throw std::invalid_argument("target sizes must be finite and non-negative");
    // Exact rational arithmetic on the binary values of n and tolerance.
    const mpq_class q(n), e(tolerance);
    const mpq_class lo_q = q * (1 - e), hi_q = q * (1 + e);
    auto ceil_q = [](const mpq_class& x) {
      mpz_class r;
      mpz_cdiv_q(r.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
      return r;
    };
    auto floor_q = [](const mpq_class& x) {
      mpz_class r;
      mpz_fdiv_q(r.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
      return r;
    };
    mpz_class lo = ceil_q(lo_q), hi = floor_q(hi_q);
    if (lo > hi) {
      lo = floor_q(lo_q);
      hi = ceil_q(hi_q);
    }
    if (lo < 0) lo = 0;
    w.lo[*v] = lo.get_si();
    w.hi[*v] = hi.get_si();
  }
  return w;
}

std::string_view to_string(AttemptStatus s) noexcept {
  switch (s) {
    case AttemptStatus::Accepted: return "accepted";
    case AttemptStatus::Oversize: return "oversize";
    case AttemptStatus::Undersize: return "undersize";
    case AttemptStatus::RejectedFinal: return "rejected-final";
  }
  return "unknown";
}

SampleStats& SampleStats::operator+=(const SampleStats& o) {
  attempts += o.attempts;
  accepted += o.accepted;
  early_aborts += o.early_aborts;
  final_rejects += o.final_rejects;
  escalations += o.escalations;
  decisions += o.decisions;
  replay_mismatches += o.replay_mismatches;
  max_precision = std::max(max_precision, o.max_precision);
  return *this;
}

Sampler::Sampler(const ClassSystem& system, Point point, SamplerOptions options)
    : point_(std::move(point)), options_(std::move(options)) {
  system.require_valid();
  if (options_.precision < 2) throw std::invalid_argument("sampler precision must be at least 2 bits");
  if (options_.precision > options_.precision_ceiling)
    throw Error(ErrorCode::PrecisionCeiling, "initial precision exceeds the precision ceiling");
  system_ = std::make_shared<const ClassSystem>(system);
  gfs_ = std::make_shared<const GFSystem>(*system_);
  nv_ = system_->variable_count();
  const std::size_t n = system_->node_count();
  info_.resize(n);
  atom_size_.assign(n * nv_, 0);
  min_.assign(n * nv_, 0);
  max_.assign(n * nv_, 0);
  for (const Node& node : system_->nodes()) {
    const auto id = static_cast<std::size_t>(node.id);
    NodeInfo& info = info_[id];
    info.kind = node.kind;
    info.first_child = static_cast<std::int32_t>(children_.size());
    info.child_count = static_cast<std::int32_t>(node.children.size());
    info.target = node.kind == NodeKind::ClassRef ? system_->class_root(static_cast<std::size_t>(node.target_class)) : -1;
    children_.insert(children_.end(), node.children.begin(), node.children.end());
    const SizeBounds& b = system_->node_bounds(node.id);
    for (std::size_t v = 0; v < nv_; ++v) {
      if (node.kind == NodeKind::Atom) atom_size_[id * nv_ + v] = node.atom_size[v];
      min_[id * nv_ + v] = b.min[v];
      max_[id * nv_ + v] = b.max[v];
    }
  }
  levels_.push_back(std::make_unique<CompiledSampler>(*system_, *gfs_, point_, options_.precision, options_.oracle));
  base_ = levels_.front().get();
}

const CompiledSampler& Sampler::level(std::size_t i) const {
  std::lock_guard<std::mutex> lock(mutex_);
  while (levels_.size() <= i) {
    const std::size_t next = levels_.size();
    if (next >= 62 || options_.precision > (options_.precision_ceiling >> next))
      throw Error(ErrorCode::PrecisionCeiling, "precision escalation would exceed " +
                                                   std::to_string(options_.precision_ceiling) + " bits");
    const mpfr_prec_t p = options_.precision << next;
    levels_.push_back(std::make_unique<CompiledSampler>(*system_, *gfs_, point_, p, options_.oracle));
  }
  return *levels_[i];
}

std::size_t Sampler::compiled_levels() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return levels_.size();
}

AttemptStatus Sampler::attempt(std::int32_t root, const AcceptanceWindow* window, EntropySource& entropy,
                               AttemptWorkspace& ws, SampleStats& stats) const {
  const std::size_t nv = nv_;
  const bool early = options_.early_rejection && window != nullptr;
  ws.stack.clear();
  ws.committed.assign(nv, 0);
  ws.pending_min.assign(nv, 0);
  ws.pending_max.assign(nv, 0);
  ws.unbounded.assign(nv, 0);
  ws.trace.decisions.clear();
  ws.trace.root = root;
  ++stats.attempts;

  auto push = [&](std::int32_t id) {
    ws.stack.push_back(id);
    const std::size_t base = static_cast<std::size_t>(id) * nv;
    for (std::size_t v = 0; v < nv; ++v) {
      ws.pending_min[v] += min_[base + v];
      if (max_[base + v] == kUnbounded) {
        ++ws.unbounded[v];
      } else {
        ws.pending_max[v] += max_[base + v];
      }
    }
  };
  auto pop = [&]() {
    const std::int32_t id = ws.stack.back();
    ws.stack.pop_back();
    const std::size_t base = static_cast<std::size_t>(id) * nv;
    for (std::size_t v = 0; v < nv; ++v) {
      ws.pending_min[v] -= min_[base + v];
      if (max_[base + v] == kUnbounded) {
        --ws.unbounded[v];
      } else {
        ws.pending_max[v] -= max_[base + v];
      }
    }
    return id;
  };
  auto check = [&]() -> std::optional<AttemptStatus> {
    for (std::size_t v = 0; v < nv; ++v)
      if (ws.committed[v] + ws.pending_min[v] > window->hi[v]) return AttemptStatus::Oversize;
    bool all_finite = true;
    for (std::size_t v = 0; v < nv; ++v) all_finite = all_finite && ws.unbounded[v] == 0;
    if (all_finite)
      for (std::size_t v = 0; v < nv; ++v)
        if (ws.committed[v] + ws.pending_max[v] < window->lo[v]) return AttemptStatus::Undersize;
    return std::nullopt;
  };
  auto finish = [&](AttemptStatus s) {
    ws.trace.size = SizeVector(ws.committed);
    stats.decisions += ws.trace.decisions.size();
    if (s == AttemptStatus::Accepted) {
      ++stats.accepted;
    } else if (s == AttemptStatus::RejectedFinal) {
      ++stats.final_rejects;
    } else {
      ++stats.early_aborts;
    }
    return s;
  };

  std::size_t lvl = 0;
  const CompiledSampler* cs = base_;
  auto prec = static_cast<std::uint32_t>(cs->precision());
  stats.max_precision = std::max<mpfr_prec_t>(stats.max_precision, cs->precision());

  push(root);
  if (early)
    if (auto s = check()) return finish(*s);
  while (!ws.stack.empty()) {
    const std::int32_t id = pop();
    const NodeInfo& info = info_[static_cast<std::size_t>(id)];
    switch (info.kind) {
      case NodeKind::Atom: {
        const std::size_t base = static_cast<std::size_t>(id) * nv;
        for (std::size_t v = 0; v < nv; ++v) ws.committed[v] += atom_size_[base + v];
        if (window && !early)
          for (std::size_t v = 0; v < nv; ++v)
            if (ws.committed[v] > window->hi[v]) return finish(AttemptStatus::Oversize);
        break;
      }
      case NodeKind::ClassRef:
        push(info.target);
        break;
      case NodeKind::Product:
        for (std::int32_t c = info.child_count; c-- > 0;)
          push(children_[static_cast<std::size_t>(info.first_child + c)]);
        break;
      case NodeKind::Union:
      case NodeKind::Seq: {
        const std::size_t index = ws.trace.decisions.size();
        Decision& d = ws.trace.decisions.emplace_back();
        d.node = id;
        d.real.extend(prec, entropy, index);
        std::optional<std::uint32_t> k = decide(cs->table(id), d.real, prec);
        while (!k) {
          cs = &level(++lvl);
          prec = static_cast<std::uint32_t>(cs->precision());
          ++stats.escalations;
          stats.max_precision = std::max<mpfr_prec_t>(stats.max_precision, cs->precision());
          for (std::size_t j = 0; j < index; ++j) {
            Decision& old = ws.trace.decisions[j];
            old.real.extend(prec, entropy, j);
            const auto again = decide(cs->table(old.node), old.real, prec);
            if (!again || *again != old.outcome) ++stats.replay_mismatches;
          }
          Decision& cur = ws.trace.decisions[index];
          cur.real.extend(prec, entropy, index);
          k = decide(cs->table(id), cur.real, prec);
        }
        Decision& cur = ws.trace.decisions[index];
        cur.outcome = *k;
        if (info.kind == NodeKind::Union) {
          push(children_[static_cast<std::size_t>(info.first_child) + *k]);
        } else {
          const std::int32_t operand = children_[static_cast<std::size_t>(info.first_child)];
          for (std::uint32_t i = 0; i < *k; ++i) push(operand);
        }
        break;
      }
    }
    if (early)
      if (auto s = check()) return finish(*s);
  }
  if (window && !window->contains(SizeVector(ws.committed))) return finish(AttemptStatus::RejectedFinal);
  return finish(AttemptStatus::Accepted);
}

std::pair<AttemptStatus, ChoiceTrace> Sampler::sample_trace(const std::string& class_name,
                                                            const AcceptanceWindow* window,
                                                            EntropySource& entropy) const {
  const std::size_t c = system_->class_index(class_name);
  AttemptWorkspace ws;
  SampleStats stats;
  const AttemptStatus s = attempt(system_->class_root(c), window, entropy, ws, stats);
  if (s != AttemptStatus::Accepted) return {s, ChoiceTrace{}};
  ws.trace.class_name = class_name;
  if (auto* stream = dynamic_cast<StreamEntropy*>(&entropy)) ws.trace.stream = stream->seed();
  return {s, std::move(ws.trace)};
}

std::size_t Sampler::verify_trace(const ChoiceTrace& trace, std::size_t lvl, EntropySource& entropy) const {
  const CompiledSampler& cs = level(lvl);
  const auto prec = static_cast<std::uint32_t>(cs.precision());
  std::size_t changed = 0;
  for (std::size_t j = 0; j < trace.decisions.size(); ++j) {
    RandomReal r = trace.decisions[j].real;
    r.extend(prec, entropy, j);
    const auto k = decide(cs.table(trace.decisions[j].node), r, prec);
    if (!k || *k != trace.decisions[j].outcome) ++changed;
  }
  return changed;
}

std::vector<ChoiceTrace> Sampler::sample(const std::string& class_name, std::size_t n, const AcceptanceWindow* window,
                                         std::uint64_t seed, SampleStats& stats, std::uint64_t first_attempt) const {
  const std::size_t c = system_->class_index(class_name);
  const std::int32_t root = system_->class_root(c);
  std::vector<ChoiceTrace> out;
  out.reserve(n);
  AttemptWorkspace ws;
  for (std::uint64_t a = first_attempt; out.size() < n; ++a) {
    StreamEntropy entropy(StreamEntropy::attempt_seed(seed, a));
    if (attempt(root, window, entropy, ws, stats) != AttemptStatus::Accepted) continue;
    ChoiceTrace t = ws.trace;
    t.class_name = class_name;
    t.stream = entropy.seed();
    out.push_back(std::move(t));
  }
  return out;
}

void walk_trace(const ClassSystem& system, const ChoiceTrace& trace,
                const std::function<void(const BuildEvent&)>& visit) {
  struct Frame {
    std::int32_t node;
    BuildEvent::Kind kind;
    std::size_t arity;
    std::size_t next;
  };
  if (trace.root < 0 || static_cast<std::size_t>(trace.root) >= system.node_count())
    throw Error(ErrorCode::InvalidTrace, "trace root is not a node of the system");
  std::vector<Frame> frames;
  std::size_t di = 0;
  auto next_decision = [&](std::int32_t id, std::size_t limit) -> std::uint32_t {
    if (di >= trace.decisions.size()) throw Error(ErrorCode::InvalidTrace, "trace ends before the object is complete");
    const Decision& d = trace.decisions[di];
    if (d.node != id)
      throw Error(ErrorCode::InvalidTrace, "decision " + std::to_string(di) + " belongs to node " +
                                               std::to_string(d.node) + ", expected " + std::to_string(id));
    if (d.outcome >= limit) throw Error(ErrorCode::InvalidTrace, "decision " + std::to_string(di) + " is out of range");
    ++di;
    return d.outcome;
  };
  auto enter = [&](std::int32_t id) {
    for (;;) {
      const Node& n = system.node(id);
      switch (n.kind) {
        case NodeKind::ClassRef:
          id = system.class_root(static_cast<std::size_t>(n.target_class));
          continue;
        case NodeKind::Union:
          id = n.children[next_decision(id, n.children.size())];
          continue;
        case NodeKind::Atom:
          visit({BuildEvent::Atom, id, 0, di});
          return;
        case NodeKind::Product:
          frames.push_back({id, BuildEvent::Product, n.children.size(), 0});
          return;
        case NodeKind::Seq:
          frames.push_back({id, BuildEvent::Sequence, next_decision(id, std::size_t{1} << 40), 0});
          return;
      }
    }
  };
  enter(trace.root);
  while (!frames.empty()) {
    Frame& f = frames.back();
    if (f.next == f.arity) {
      const BuildEvent ev{f.kind, f.node, f.arity, di};
      frames.pop_back();
      visit(ev);
      continue;
    }
    const Node& n = system.node(f.node);
    const std::int32_t child = f.kind == BuildEvent::Product ? n.children[f.next] : n.children.front();
    ++f.next;
    enter(child);
  }
  if (di != trace.decisions.size()) throw Error(ErrorCode::InvalidTrace, "trace has unused decisions");
}

namespace {

std::string joined(const std::string& head, const std::vector<std::string>& parts) {
  std::string out = head + "(";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  return out + ")";
}

}  // namespace

std::string TermBuilder::product(const ConstructorDescriptor&, std::vector<std::string> children) {
  return joined("Prod", children);
}

std::string TermBuilder::sequence(const ConstructorDescriptor&, std::vector<std::string> children) {
  return joined("Seq", children);
}

std::string build_term(const ChoiceTrace& trace, const ClassSystem& system) {
  TermBuilder b;
  return build(trace, system, b);
}

std::string structure_key(const ChoiceTrace& trace) {
  std::string key;
  key.reserve(trace.decisions.size() * 2);
  for (const auto& d : trace.decisions) {
    std::uint32_t v = d.outcome;
    do {
      const auto byte = static_cast<unsigned char>((v & 0x7f) | (v > 0x7f ? 0x80 : 0));
      key.push_back(static_cast<char>(byte));
      v >>= 7;
    } while (v);
  }
  return key;
}

}  // namespace combkit
