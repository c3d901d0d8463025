#include "btlab/faa_di_bruno.hpp"

#include "btlab/errors.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace btlab {

namespace {

struct Block {
  std::size_t candidate;
  int multiplicity;
};

void choose_blocks(const std::vector<MultiIndex>& cands, std::size_t start, const MultiIndex& remaining,
                   std::vector<Block>& chosen, std::vector<std::vector<Block>>& out) {
  if (remaining.is_zero()) {
    out.push_back(chosen);
    return;
  }
  for (std::size_t c = start; c < cands.size(); ++c) {
    const MultiIndex& d = cands[c];
    if (!d.leq(remaining)) continue;
    MultiIndex rest = remaining;
    for (int k = 1;; ++k) {
      rest = rest - d;
      chosen.push_back({c, k});
      choose_blocks(cands, c + 1, rest, chosen, out);
      chosen.pop_back();
      if (!d.leq(rest)) break;
    }
  }
}

void compositions(int total, int parts, std::vector<int>& cur, std::size_t pos,
                  std::vector<MultiIndex>& out) {
  if (pos + 1 == static_cast<std::size_t>(parts)) {
    cur[pos] = total;
    out.emplace_back(cur);
    return;
  }
  for (int v = total; v >= 0; --v) {
    cur[pos] = v;
    compositions(total - v, parts, cur, pos + 1, out);
  }
}

std::vector<MultiIndex> betas_of_size(int size, int p) {
  std::vector<MultiIndex> out;
  std::vector<int> cur(static_cast<std::size_t>(p), 0);
  compositions(size, p, cur, 0, out);
  std::sort(out.begin(), out.end());
  return out;
}

double term_coefficient(const MultiIndex& alpha, const PartitionTerm& t) {
  BigInt den = 1;
  for (std::size_t j = 0; j < t.length(); ++j) {
    den *= factorial_big(t.betas[j]);
    BigInt df = factorial_big(t.deltas[j]);
    for (int r = 0; r < t.betas[j].order(); ++r) den *= df;
  }
  using Float = boost::multiprecision::cpp_bin_float_double_extended;
  Float q = Float(factorial_big(alpha)) / Float(den);
  return static_cast<double>(q);
}

}  // namespace

std::vector<PartitionTerm> faa_di_bruno_terms(const MultiIndex& alpha, int p) {
  if (alpha.is_zero()) throw PreconditionError("faa_di_bruno_terms needs |alpha| >= 1");
  if (p < 1) throw PreconditionError("faa_di_bruno_terms needs p >= 1");

  std::vector<MultiIndex> cands;
  for (auto& d : lower_set(alpha))
    if (!d.is_zero()) cands.push_back(d);

  std::vector<std::vector<Block>> block_sets;
  std::vector<Block> chosen;
  choose_blocks(cands, 0, alpha, chosen, block_sets);

  std::vector<PartitionTerm> terms;
  for (const auto& blocks : block_sets) {
    std::vector<std::vector<MultiIndex>> options;
    for (const auto& b : blocks) options.push_back(betas_of_size(b.multiplicity, p));
    std::vector<std::size_t> pick(blocks.size(), 0);
    while (true) {
      PartitionTerm t;
      t.kappa = MultiIndex(static_cast<std::size_t>(p));
      for (std::size_t j = 0; j < blocks.size(); ++j) {
        t.deltas.push_back(cands[blocks[j].candidate]);
        t.betas.push_back(options[j][pick[j]]);
        t.kappa = t.kappa + options[j][pick[j]];
      }
      t.coefficient = term_coefficient(alpha, t);
      terms.push_back(std::move(t));
      std::size_t j = 0;
      for (; j < blocks.size(); ++j) {
        if (++pick[j] < options[j].size()) break;
        pick[j] = 0;
      }
      if (j == blocks.size()) break;
    }
  }

  std::sort(terms.begin(), terms.end(), [](const PartitionTerm& a, const PartitionTerm& b) {
    if (a.length() != b.length()) return a.length() < b.length();
    if (a.deltas != b.deltas) return a.deltas < b.deltas;
    return a.betas < b.betas;
  });
  return terms;
}

const std::vector<PartitionTerm>& cached_faa_di_bruno_terms(const MultiIndex& alpha, int p) {
  static std::mutex mu;
  static std::map<std::pair<MultiIndex, int>, std::unique_ptr<std::vector<PartitionTerm>>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{alpha, p}];
  if (!slot) slot = std::make_unique<std::vector<PartitionTerm>>(faa_di_bruno_terms(alpha, p));
  return *slot;
}

Complex faa_di_bruno_sum(const MultiIndex& alpha, int p, const OuterDerivative& outer,
                         const InnerDerivative& inner) {
  const auto& terms = cached_faa_di_bruno_terms(alpha, p);
  std::map<std::pair<std::size_t, MultiIndex>, Complex> inner_cache;
  auto g = [&](std::size_t c, const MultiIndex& d) {
    auto key = std::make_pair(c, d);
    auto it = inner_cache.find(key);
    if (it != inner_cache.end()) return it->second;
    Complex v = inner(c, d);
    inner_cache.emplace(key, v);
    return v;
  };
  std::map<MultiIndex, Complex> outer_cache;
  Complex sum = 0.0;
  for (const auto& t : terms) {
    Complex prod = t.coefficient;
    for (std::size_t j = 0; j < t.length(); ++j)
      for (std::size_t c = 0; c < static_cast<std::size_t>(p); ++c) {
        const int e = t.betas[j][c];
        if (e) prod *= std::pow(g(c, t.deltas[j]), e);
      }
    if (prod == Complex{}) continue;
    auto it = outer_cache.find(t.kappa);
    if (it == outer_cache.end()) it = outer_cache.emplace(t.kappa, outer(t.kappa)).first;
    sum += it->second * prod;
  }
  return sum;
}

Complex compose_derivative(const SampledFunction& f, std::span<const SampledFunction> g,
                           const MultiIndex& alpha, Point x) {
  const int p = static_cast<int>(g.size());
  if (p < 1 || static_cast<int>(f.dim()) != p) throw PreconditionError("outer dimension must equal inner count");
  const int K = alpha.order();
  std::vector<Jet> gj;
  std::vector<double> y;
  for (const auto& gc : g) {
    if (gc.max_order() < K) throw CapabilityError("inner oracle depth below requested order");
    gj.push_back(gc.jet(x, K));
    const Complex v = gj.back().value();
    if (std::abs(v.imag()) > 1e-12 * (1.0 + std::abs(v.real())))
      throw DomainError("compose_derivative: inner value leaves the real domain of the outer function");
    y.push_back(v.real());
  }
  if (!f.domain().contains(Point(y))) throw DomainError("compose_derivative: g(x) outside outer domain");
  if (f.max_order() < K) throw CapabilityError("outer oracle depth below requested order");
  const Jet fj = f.jet(Point(y), K);
  if (K == 0) return fj.value();
  return faa_di_bruno_sum(
      alpha, p, [&](const MultiIndex& k) { return fj.derivative(k); },
      [&](std::size_t c, const MultiIndex& d) { return gj[c].derivative(d); });
}

Complex exp_phase_derivative(double tau, const SampledFunction& f, const MultiIndex& alpha, Point x) {
  if (!(tau > 0)) throw ParameterError("exp_phase_derivative needs tau > 0");
  const int K = alpha.order();
  if (f.max_order() < K) throw CapabilityError("phase oracle depth below requested order");
  const Jet fj = f.jet(x, K);
  const Complex e = std::exp(tau * fj.value());
  if (K == 0) return e;
  return faa_di_bruno_sum(
      alpha, 1, [&](const MultiIndex& k) { return std::pow(tau, k[0]) * e; },
      [&](std::size_t, const MultiIndex& d) { return fj.derivative(d); });
}

Jet exp_phase_jet(double tau, const Jet& f) {
  const Complex e = std::exp(tau * f.value());
  Jet out(f.layout(), e);
  const JetLayout* L = f.layout();
  for (std::size_t i = 1; i < L->size(); ++i)
    out.set_derivative(L->index(i), faa_di_bruno_sum(
                                        L->index(i), 1, [&](const MultiIndex& k) { return std::pow(tau, k[0]) * e; },
                                        [&](std::size_t, const MultiIndex& d) { return f.derivative(d); }));
  return out;
}

PhaseDerivative exp_phase_derivative_checked(double tau, const SampledFunction& f, const MultiIndex& alpha,
                                             Point x) {
  if (!f.declared_gevrey()) throw CapabilityError("bound check needs declared Gevrey constants on the phase");
  const GevreyParams g = *f.declared_gevrey();
  g.validate();
  PhaseDerivative out;
  out.value = exp_phase_derivative(tau, f, alpha, x);
  const int K = alpha.order();
  const Jet fj = f.jet(x, K);
  const double re_f = fj.value().real();
  double C = 0.0;
  for (std::size_t i = 1; i < fj.size(); ++i) {
    const MultiIndex& d = fj.layout()->index(i);
    C = std::max(C, std::abs(fj.derivative(d)) / (std::pow(g.h, d.order()) * std::pow(factorial(d), g.s)));
  }
  const double moment = K == 0 ? 1.0 : fdb_moment_sum(alpha, C, 1);
  out.bound = std::pow(g.h, K) * std::pow(factorial(K), g.s) *
              std::exp(tau * re_f + g.s * std::pow(tau, 1.0 / g.s)) * moment;
  out.within_bound = std::abs(out.value) <= out.bound * (1.0 + 1e-12);
  return out;
}

std::vector<BigInt> fdb_moment_polynomial(const MultiIndex& alpha, int p) {
  std::vector<BigInt> coef(static_cast<std::size_t>(alpha.order()) + 1, 0);
  for (const auto& t : faa_di_bruno_terms(alpha, p)) {
    BigInt c = factorial_big(t.kappa);
    for (const auto& b : t.betas) c /= factorial_big(b);
    coef[static_cast<std::size_t>(t.kappa.order())] += c;
  }
  return coef;
}

double fdb_moment_sum(const MultiIndex& alpha, double A, int p) {
  if (!(A > 0)) throw PreconditionError("fdb_moment_sum needs A > 0");
  const auto coef = fdb_moment_polynomial(alpha, p);
  double sum = 0.0;
  for (std::size_t k = coef.size(); k-- > 0;) sum = sum * A + static_cast<double>(coef[k]);
  return sum;
}

bool partition_factorial_bound(const PartitionTerm& term, const MultiIndex& alpha, int t) {
  if (t < 1) throw PreconditionError("exponent t must be a positive integer");
  BigInt lhs = factorial_big(term.kappa.order());
  for (std::size_t j = 0; j < term.length(); ++j) {
    const BigInt f = factorial_big(term.deltas[j].order());
    for (int r = 0; r < term.betas[j].order(); ++r) lhs *= f;
  }
  const BigInt rhs = factorial_big(alpha.order());
  return boost::multiprecision::pow(lhs, static_cast<unsigned>(t)) <=
         boost::multiprecision::pow(rhs, static_cast<unsigned>(t));
}

}  // namespace btlab
