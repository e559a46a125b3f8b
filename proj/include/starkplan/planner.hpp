#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "starkplan/data.hpp"
#include "starkplan/emitters.hpp"
#include "starkplan/errors.hpp"
#include "starkplan/interference.hpp"

// Chip-scale optimization: tuneable-fraction estimation from a measured
// inhomogeneous distribution, and emitter pairing with bias assignment under
// quench and range constraints.

namespace starkplan {

// ---------------------------------------------------------------------------
// Inhomogeneous distribution.

/// Normalized probability density on a strictly increasing frequency grid,
/// interpreted piecewise-linearly between nodes.
struct InhomogeneousPdf {
  std::vector<double> grid_ghz;
  std::vector<double> density;      // >= 0, trapezoid integral == 1
  double background_level = 0.0;    // provenance: the subtracted baseline

  void validate() const {
    if (grid_ghz.size() != density.size() || grid_ghz.size() < 2)
      throw domain_error("pdf: need >= 2 grid points");
    for (std::size_t i = 1; i < grid_ghz.size(); ++i)
      if (!(grid_ghz[i] > grid_ghz[i - 1]))
        throw domain_error("pdf: grid must be strictly increasing");
    double integral = 0.0;
    for (std::size_t i = 1; i < grid_ghz.size(); ++i) {
      if (density[i] < 0.0 || density[i - 1] < 0.0) throw domain_error("pdf: density must be >= 0");
      integral += 0.5 * (density[i] + density[i - 1]) * (grid_ghz[i] - grid_ghz[i - 1]);
    }
    if (std::abs(integral - 1.0) > 1e-9) throw domain_error("pdf: not normalized");
  }
};

/// Background-subtract (clamping negatives to zero) and trapezoid-normalize a
/// measured ensemble spectrum into a probability density.
inline InhomogeneousPdf pdf_from_spectrum(const Spectrum& s, double background) {
  if (s.points.size() < 2) throw domain_error("pdf_from_spectrum: need >= 2 samples");
  if (background < 0.0) throw domain_error("pdf_from_spectrum: background must be >= 0");
  InhomogeneousPdf pdf;
  pdf.background_level = background;
  for (const auto& p : s.points) {
    pdf.grid_ghz.push_back(p.frequency_ghz);
    pdf.density.push_back(std::max(0.0, p.intensity - background));
  }
  double integral = 0.0;
  for (std::size_t i = 1; i < pdf.grid_ghz.size(); ++i)
    integral += 0.5 * (pdf.density[i] + pdf.density[i - 1]) *
                (pdf.grid_ghz[i] - pdf.grid_ghz[i - 1]);
  if (!(integral > 0.0))
    throw domain_error("pdf_from_spectrum: nothing left after background subtraction");
  for (auto& d : pdf.density) d /= integral;
  return pdf;
}

namespace detail {

/// Integral of the piecewise-linear density from the grid start to x.
inline double pdf_cumulative(const InhomogeneousPdf& pdf, double x) {
  const auto& g = pdf.grid_ghz;
  const auto& d = pdf.density;
  if (x <= g.front()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double h = g[i] - g[i - 1];
    if (x >= g[i]) {
      acc += 0.5 * (d[i] + d[i - 1]) * h;
      continue;
    }
    const double t = (x - g[i - 1]) / h;
    acc += h * (d[i - 1] * t + 0.5 * (d[i] - d[i - 1]) * t * t);
    return acc;
  }
  return acc;
}

inline double pdf_value(const InhomogeneousPdf& pdf, double x) {
  const auto& g = pdf.grid_ghz;
  const auto& d = pdf.density;
  if (x <= g.front() || x >= g.back()) return 0.0;
  const auto it = std::upper_bound(g.begin(), g.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - g.begin());
  const double t = (x - g[i - 1]) / (g[i] - g[i - 1]);
  return d[i - 1] + (d[i] - d[i - 1]) * t;
}

}  // namespace detail

/// Maximum captured probability for a sliding window of the given width:
/// max over window starts of the windowed integral, with exact sub-bin
/// handling (the density is piecewise linear, so between grid-aligned start
/// candidates the windowed integral is quadratic and maximized in closed
/// form). Windows wider than the grid span capture everything.
inline double tunable_fraction(const InhomogeneousPdf& pdf, double window_ghz) {
  if (window_ghz <= 0.0) throw domain_error("tunable_fraction: window must be > 0");
  pdf.validate();
  const double lo = pdf.grid_ghz.front();
  const double hi = pdf.grid_ghz.back();
  if (window_ghz >= hi - lo) return 1.0;

  // Candidate starts: every s where s or s+window hits a grid node.
  std::vector<double> starts;
  for (double v : pdf.grid_ghz) {
    if (v >= lo && v <= hi - window_ghz) starts.push_back(v);
    const double s = v - window_ghz;
    if (s >= lo && s <= hi - window_ghz) starts.push_back(s);
  }
  starts.push_back(lo);
  starts.push_back(hi - window_ghz);
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

  auto window_integral = [&](double s) {
    return detail::pdf_cumulative(pdf, s + window_ghz) - detail::pdf_cumulative(pdf, s);
  };

  double best = 0.0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    best = std::max(best, window_integral(starts[i]));
    if (i + 1 < starts.size()) {
      // F'(s) = d(s+w) - d(s) is linear between candidates; check its root.
      const double s0 = starts[i], s1 = starts[i + 1];
      const double f0 = detail::pdf_value(pdf, s0 + window_ghz) - detail::pdf_value(pdf, s0);
      const double f1 = detail::pdf_value(pdf, s1 + window_ghz) - detail::pdf_value(pdf, s1);
      if ((f0 > 0.0) != (f1 > 0.0) && f0 != f1) {
        const double s = s0 + (s1 - s0) * f0 / (f0 - f1);
        best = std::max(best, window_integral(s));
      }
    }
  }
  return std::min(best, 1.0);
}

// ---------------------------------------------------------------------------
// Pair planning.

struct PlanConstraints {
  double min_neutral_fraction = std::exp(-1.0);
  /// Optional per-emitter bias floor (most negative usable voltage); the
  /// emitter's own v_min applies where absent.
  std::map<std::string, double> max_reverse_bias_v;
  bool red_shift_only = true;
  enum class Objective { SumLogPexc, SumPexc } objective = Objective::SumLogPexc;
};

struct PlannedPair {
  std::string a, b;
  double target_ghz;
  double v_a, v_b;
  double p_exc;
  bool quench_a, quench_b;  // neutral fraction below 1/e at the planned bias
};

struct TuningPlan {
  std::vector<PlannedPair> pairs;
  std::vector<std::string> unpaired;
  double objective_value = 0.0;  // sum of the per-pair objective terms
};

namespace detail {

struct PairCandidate {
  bool feasible = false;
  PlannedPair plan;
  double weight = -std::numeric_limits<double>::infinity();
};

inline PairCandidate evaluate_pair(const StarkResponse& ea, const StarkResponse& eb,
                                   const PlanConstraints& cons) {
  PairCandidate out;
  StarkResponse a = ea, b = eb;
  if (auto it = cons.max_reverse_bias_v.find(a.id); it != cons.max_reverse_bias_v.end())
    a.v_min_v = std::max(a.v_min_v, it->second);
  if (auto it = cons.max_reverse_bias_v.find(b.id); it != cons.max_reverse_bias_v.end())
    b.v_min_v = std::max(b.v_min_v, it->second);

  // Red-shift-only: every emitter reaches [nu0 + deepest shift, nu0]. The
  // pair meets at the highest mutually reachable frequency (least broadening
  // and least quench), i.e. the redder zero-field line when reachable.
  const double lo = std::max(a.nu0_ghz + max_red_shift_ghz(a), b.nu0_ghz + max_red_shift_ghz(b));
  const double target = std::min(a.nu0_ghz, b.nu0_ghz);
  if (target < lo - 1e-12) return out;

  auto bias_for = [](const StarkResponse& e, double target_ghz) {
    const double shift = target_ghz - e.nu0_ghz;
    return shift >= 0.0 ? 0.0 : voltage_for_shift(e, shift);
  };
  double va, vb;
  try {
    va = bias_for(a, target);
    vb = bias_for(b, target);
  } catch (const unreachable_error&) {
    return out;
  }

  const double nf_a = neutral_fraction(a, va);
  const double nf_b = neutral_fraction(b, vb);
  if (nf_a < cons.min_neutral_fraction || nf_b < cons.min_neutral_fraction) return out;

  const double ga = stark_linewidth_ghz(a, va);
  const double gb = stark_linewidth_ghz(b, vb);
  const double p = p_exc(std::min(ga, gb), std::max(ga, gb), 0.0);

  out.feasible = true;
  out.plan = {a.id, b.id, target, va, vb, p, nf_a < std::exp(-1.0), nf_b < std::exp(-1.0)};
  out.weight = cons.objective == PlanConstraints::Objective::SumLogPexc ? std::log(p) : p;
  return out;
}

/// Exact maximum-cardinality, maximum-weight matching by subset DP.
inline std::pair<int, double> match_exact(int n, const std::vector<std::vector<double>>& w,
                                          std::vector<std::pair<int, int>>* pairs_out) {
  const double ninf = -std::numeric_limits<double>::infinity();
  const std::size_t full = std::size_t{1} << n;
  // dp value: (count, weight), lexicographic.
  std::vector<int> cnt(full, 0);
  std::vector<double> wt(full, 0.0);
  std::vector<int> choice(full, -1);  // partner of the lowest set bit, or -1
  for (std::size_t s = 1; s < full; ++s) {
    const int i = std::countr_zero(s);
    const std::size_t rest = s & (s - 1);  // s without bit i
    cnt[s] = cnt[rest];
    wt[s] = wt[rest];
    choice[s] = -1;
    for (int j = i + 1; j < n; ++j) {
      if (!(rest >> j & 1) || w[i][j] == ninf) continue;
      const std::size_t r2 = rest & ~(std::size_t{1} << j);
      const int c = cnt[r2] + 1;
      const double v = wt[r2] + w[i][j];
      if (c > cnt[s] || (c == cnt[s] && v > wt[s])) {
        cnt[s] = c;
        wt[s] = v;
        choice[s] = j;
      }
    }
  }
  if (pairs_out) {
    std::size_t s = full - 1;
    while (s) {
      const int i = std::countr_zero(s);
      if (choice[s] < 0) {
        s &= s - 1;
      } else {
        pairs_out->emplace_back(i, choice[s]);
        s &= ~(std::size_t{1} << choice[s]);
        s &= s - 1;
      }
    }
  }
  return {cnt[full - 1], wt[full - 1]};
}

/// Greedy matching with one 2-swap improvement pass, for large ensembles.
inline void match_greedy(int n, const std::vector<std::vector<double>>& w,
                         std::vector<std::pair<int, int>>* pairs_out) {
  const double ninf = -std::numeric_limits<double>::infinity();
  struct Edge { double weight; int i, j; };
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (w[i][j] > ninf) edges.push_back({w[i][j], i, j});
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.weight > b.weight || (a.weight == b.weight && std::tie(a.i, a.j) < std::tie(b.i, b.j));
  });
  std::vector<int> mate(n, -1);
  for (const auto& e : edges) {
    if (mate[e.i] < 0 && mate[e.j] < 0) {
      mate[e.i] = e.j;
      mate[e.j] = e.i;
    }
  }
  // 2-swap: exchange partners between two pairs when it raises the total.
  bool improved = true;
  while (improved) {
    improved = false;
    for (int a = 0; a < n; ++a) {
      if (mate[a] <= a) continue;
      for (int c = a + 1; c < n; ++c) {
        if (mate[c] <= c || c == mate[a]) continue;
        const int b = mate[a], d = mate[c];
        const double cur = w[a][b] + w[c][d];
        const double alt1 = w[std::min(a, c)][std::max(a, c)] + w[std::min(b, d)][std::max(b, d)];
        const double alt2 = w[std::min(a, d)][std::max(a, d)] + w[std::min(b, c)][std::max(b, c)];
        if (alt1 > cur && alt1 >= alt2) {
          mate[a] = c; mate[c] = a; mate[b] = d; mate[d] = b;
          improved = true;
        } else if (alt2 > cur) {
          mate[a] = d; mate[d] = a; mate[b] = c; mate[c] = b;
          improved = true;
        }
      }
    }
  }
  for (int i = 0; i < n; ++i)
    if (mate[i] > i) pairs_out->emplace_back(i, mate[i]);
}

}  // namespace detail

/// Pair up emitters for mutual resonance, maximizing pair count first and
/// the summed objective (log p_exc by default) among maximum matchings.
/// Exact subset-DP matching up to 20 emitters, greedy with a swap pass
/// beyond. Infeasible emitters are reported unpaired; an empty plan is a
/// valid outcome, not an error.
inline TuningPlan plan_pairs(const std::vector<StarkResponse>& emitters,
                             const PlanConstraints& cons = {}) {
  if (emitters.size() < 2) throw domain_error("plan_pairs: need >= 2 emitters");
  if (!cons.red_shift_only)
    throw domain_error("plan_pairs: only red-shift-only planning is modeled");
  const int n = static_cast<int>(emitters.size());
  const double ninf = -std::numeric_limits<double>::infinity();

  std::vector<std::vector<detail::PairCandidate>> cand(n, std::vector<detail::PairCandidate>(n));
  std::vector<std::vector<double>> w(n, std::vector<double>(n, ninf));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      cand[i][j] = detail::evaluate_pair(emitters[i], emitters[j], cons);
      if (cand[i][j].feasible) w[i][j] = cand[i][j].weight;
    }
  }

  std::vector<std::pair<int, int>> chosen;
  if (n <= 20) detail::match_exact(n, w, &chosen);
  else detail::match_greedy(n, w, &chosen);

  TuningPlan plan;
  std::vector<bool> used(n, false);
  std::sort(chosen.begin(), chosen.end());
  for (auto [i, j] : chosen) {
    plan.pairs.push_back(cand[i][j].plan);
    plan.objective_value += cand[i][j].weight;
    used[i] = used[j] = true;
  }
  for (int i = 0; i < n; ++i)
    if (!used[i]) plan.unpaired.push_back(emitters[i].id);
  return plan;
}

}  // namespace starkplan
