#pragma once

// Time-optimal state preparation: enumeration of bang-bang (BB-k) and
// bang-singular-bang (BSB) structures, Nelder-Mead over switching times, an
// outer scan over the total time and detection of the critical amplitude
// where the singular segment disappears.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qtoc/dynamics.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/optim.hpp"
#include "qtoc/pmp.hpp"
#include "qtoc/protocol.hpp"

namespace qtoc {

struct StatePrepProblem {
  BlochPoint init{0.7 * M_PI, 0.0};
  BlochPoint target{0.35 * M_PI, M_PI};
  ModelParams params{};

  void validate() const {
    params.validate();
    for (const auto& b : {init, target})
      if (!(b.theta >= 0.0 && b.theta <= M_PI) || !std::isfinite(b.phi))
        throw ValidationError("state-prep: theta must lie in [0, pi] and phi must be finite");
  }
  [[nodiscard]] QubitState init_state() const { return state_from_bloch(init); }
  [[nodiscard]] QubitState target_state() const { return state_from_bloch(target); }
  [[nodiscard]] CostSpec cost_spec() const { return CostSpec::state_prep(init_state(), target_state()); }
};

enum class StructureKind { BB, BSB };

/// BB-k: k switchings between +-u_max starting with `first_sign`.
/// BSB: bang (first_sign) -> u = 0 -> bang (last_sign).
struct StructureLabel {
  StructureKind kind = StructureKind::BB;
  int switchings = 0;
  int first_sign = 1;
  int last_sign = 1;

  static StructureLabel bb(int k, int sign) { return {StructureKind::BB, k, sign, (k % 2 == 0) ? sign : -sign}; }
  static StructureLabel bsb(int first, int last) { return {StructureKind::BSB, 2, first, last}; }

  [[nodiscard]] std::vector<Bang> levels() const {
    const Bang first = first_sign > 0 ? Bang::Plus : Bang::Minus;
    if (kind == StructureKind::BSB) return {first, Bang::Zero, last_sign > 0 ? Bang::Plus : Bang::Minus};
    std::vector<Bang> out;
    Bang cur = first;
    for (int i = 0; i <= switchings; ++i) {
      out.push_back(cur);
      cur = flip(cur);
    }
    return out;
  }

  /// "BB-4" or "BSB": the plateau family, without signs.
  [[nodiscard]] std::string family() const {
    return kind == StructureKind::BSB ? "BSB" : "BB-" + std::to_string(switchings);
  }
  [[nodiscard]] std::string name() const {
    auto s = [](int v) { return v > 0 ? "+" : "-"; };
    if (kind == StructureKind::BSB) return std::string("BSB") + s(first_sign) + s(last_sign);
    return family() + s(first_sign);
  }
  bool operator==(const StructureLabel&) const = default;
};

inline std::optional<StructureLabel> parse_structure(const std::string& s) {
  if (s.rfind("BSB", 0) == 0) {
    if (s.size() == 3) return StructureLabel::bsb(1, 1);
    if (s.size() == 5) return StructureLabel::bsb(s[3] == '-' ? -1 : 1, s[4] == '-' ? -1 : 1);
    return std::nullopt;
  }
  if (s.rfind("BB-", 0) == 0) {
    std::size_t pos = 0;
    int k = 0;
    try {
      k = std::stoi(s.substr(3), &pos);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (k < 0) return std::nullopt;
    const std::string rest = s.substr(3 + pos);
    if (rest.empty() || rest == "+") return StructureLabel::bb(k, 1);
    if (rest == "-") return StructureLabel::bb(k, -1);
  }
  return std::nullopt;
}

/// Every BB-k (both leading signs) for k <= max_switchings plus the four BSB sign patterns.
inline std::vector<StructureLabel> default_structures(int max_switchings) {
  std::vector<StructureLabel> out;
  for (int k = 0; k <= max_switchings; ++k)
    for (int s : {1, -1}) out.push_back(StructureLabel::bb(k, s));
  for (int a : {1, -1})
    for (int b : {1, -1}) out.push_back(StructureLabel::bsb(a, b));
  return out;
}

inline BangSequence make_bang_sequence(const StructureLabel& label, std::vector<double> times, double T,
                                       double u_max) {
  std::sort(times.begin(), times.end());
  return BangSequence{u_max, T, std::move(times), label.levels()};
}

/// C_SP of the bang sequence with the given switching instants. Out-of-order
/// times are sorted and clipped to [0, T] before evaluation.
inline double cost_of_switchings(std::span<const double> times, std::span<const Bang> levels, double T,
                                 const StatePrepProblem& problem) {
  if (levels.size() != times.size() + 1) throw ValidationError("cost_of_switchings: need one more level than times");
  std::array<double, 64> buf{};
  std::vector<double> heap;
  double* t = buf.data();
  if (times.size() > buf.size()) {
    heap.resize(times.size());
    t = heap.data();
  }
  for (std::size_t i = 0; i < times.size(); ++i) t[i] = std::clamp(times[i], 0.0, T);
  std::sort(t, t + times.size());
  QubitState psi = problem.init_state();
  double prev = 0.0;
  for (std::size_t i = 0; i <= times.size(); ++i) {
    const double edge = i < times.size() ? t[i] : T;
    psi = constant_propagator(edge - prev, problem.params.u_max * level(levels[i]), problem.params) * psi;
    prev = edge;
  }
  return -std::norm(inner(problem.target_state(), psi));
}

struct StructureSearchConfig {
  int restarts = 20;
  int max_iterations = 2000;
  double tolerance = 1e-10;
  std::uint64_t seed = 20240611;
  /// Restarts stop once C + 1 falls below this value.
  double target_gap = 1e-10;
};

struct StructureOptimum {
  std::vector<double> times;  ///< sorted interior switching instants
  double cost = 0.0;
  bool converged = false;
  int evaluations = 0;
  std::uint64_t seed = 0;
};

/// Best of `cfg.restarts` bounded Nelder-Mead runs over the switching times
/// of `label` at fixed T. Starts are stratified: the i-th time is drawn
/// uniformly from the i-th of k equal slices of [0, T]. An optional warm
/// start is tried first.
inline StructureOptimum optimize_structure(const StructureLabel& label, double T, const StatePrepProblem& problem,
                                           const StructureSearchConfig& cfg = {},
                                           const std::vector<double>* warm = nullptr) {
  if (!(T > 0.0)) throw ValidationError("optimize_structure: T must be positive");
  const auto levels = label.levels();
  const std::size_t k = levels.size() - 1;
  StructureOptimum out;
  out.seed = cfg.seed;
  if (k == 0) {
    out.cost = cost_of_switchings({}, levels, T, problem);
    out.converged = true;
    out.evaluations = 1;
    return out;
  }
  const QubitState init = problem.init_state();
  const QubitState target = problem.target_state();
  const ModelParams& p = problem.params;
  std::vector<double> lv(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) lv[i] = p.u_max * level(levels[i]);
  std::vector<double> sorted(k);
  optim::Objective f = [&](std::span<const double> x) {
    std::copy(x.begin(), x.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    QubitState psi = init;
    double prev = 0.0;
    for (std::size_t i = 0; i <= k; ++i) {
      const double edge = i < k ? std::clamp(sorted[i], 0.0, T) : T;
      psi = constant_propagator(edge - prev, lv[i], p) * psi;
      prev = edge;
    }
    return -std::norm(inner(target, psi));
  };
  optim::OptimizerConfig oc;
  oc.max_iterations = cfg.max_iterations;
  oc.tolerance = cfg.tolerance;
  oc.x_tolerance = 1e-9 * std::max(1.0, T);
  oc.restarts = 1;
  oc.bounds.assign(k, optim::Bound{0.0, T});
  oc.target = -1.0 + cfg.target_gap;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  optim::Result best;
  bool any_converged = false;
  const int runs = std::max(1, cfg.restarts) + (warm ? 1 : 0);
  for (int r = 0; r < runs; ++r) {
    std::vector<double> x0(k);
    if (warm && r == 0 && warm->size() == k) {
      for (std::size_t i = 0; i < k; ++i) x0[i] = std::clamp((*warm)[i], 0.0, T);
    } else {
      for (std::size_t i = 0; i < k; ++i) x0[i] = (static_cast<double>(i) + unit(rng)) * T / static_cast<double>(k);
    }
    auto res = optim::nelder_mead(f, x0, oc);
    out.evaluations += res.evaluations;
    if (res.status != optim::Status::MaxIterations) any_converged = true;
    if (best.x.empty() || res.f < best.f) best = std::move(res);
    if (best.f <= *oc.target) break;
  }
  out.times = best.x;
  for (double& t : out.times) t = std::clamp(t, 0.0, T);
  std::sort(out.times.begin(), out.times.end());
  out.cost = best.f;
  out.converged = any_converged;
  return out;
}

/// Durations of all segments of a switching-time vector on [0, T].
inline std::vector<double> segment_durations(const std::vector<double>& times, double T) {
  std::vector<double> d;
  double prev = 0.0;
  for (double t : times) {
    d.push_back(t - prev);
    prev = t;
  }
  d.push_back(T - prev);
  return d;
}

// ---------------------------------------------------------------------------

struct SearchConfig {
  double T_max = 0.0;               ///< 0 = 2 pi / u_max
  double coarse_step = 0.05 * M_PI;
  double tol_fidelity = 1e-6;
  double time_resolution = 1e-6;    ///< bisection width in T
  int extra_switchings = 2;         ///< BB-k allowed for k <= ceil(omega0 T / pi) + extra
  double dip_threshold = 0.05;      ///< refine local minima of C + 1 below this value
  double audit_fraction = 0.999;    ///< PMP audit at this fraction of T*
  double sign_min = 0.999;
  double hoc_tolerance = 1e-8;
  double singular_min_fraction = 1e-3;
  std::vector<StructureLabel> structures;  ///< empty = default_structures
  StructureSearchConfig nm{};
  ReportConfig report{};
};

struct CandidateRecord {
  StructureLabel structure;
  double T_star = 0.0;
  double cost = 0.0;
  bool accepted = false;
  std::string note;
};

struct SearchResult {
  bool found = false;
  double T_star = 0.0;
  StructureLabel structure;
  std::vector<double> switch_times;
  double cost = 0.0;
  double singular_duration = 0.0;   ///< BSB only
  double audit_T = 0.0;
  OptimalityReport report;           ///< at audit_T
  std::vector<CandidateRecord> candidates;

  [[nodiscard]] BangSequence protocol(double u_max) const {
    return make_bang_sequence(structure, switch_times, T_star, u_max);
  }
};

namespace detail {

inline std::array<double, 3> bloch_vector(const QubitState& s) {
  const complex c = std::conj(s.c0) * s.c1;
  return {2.0 * c.real(), 2.0 * c.imag(), std::norm(s.c0) - std::norm(s.c1)};
}

inline std::vector<double> scaled(const std::vector<double>& times, double from, double to) {
  std::vector<double> out(times);
  for (double& t : out) t *= to / from;
  return out;
}

/// Solves the 3x3 system m x = b by Cramer's rule; false when singular.
inline bool solve3(const std::array<std::array<double, 3>, 3>& m, const std::array<double, 3>& b,
                   std::array<double, 3>& x) {
  auto det = [](const std::array<std::array<double, 3>, 3>& a) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det(m);
  if (!(std::abs(d) > 1e-300)) return false;
  for (int c = 0; c < 3; ++c) {
    auto mc = m;
    for (int r = 0; r < 3; ++r) mc[r][c] = b[r];
    x[c] = det(mc) / d;
  }
  return true;
}

}  // namespace detail

/// Exact BSB time-optimum near (t1, t2, T): Gauss-Newton on the conditions
/// "first bang ends on the equator" and "final state equals the target", with
/// the singular segment in between rotating about z on the equator.
inline std::optional<std::array<double, 3>> polish_bsb(const StructureLabel& label, double t1, double t2, double T,
                                                      const StatePrepProblem& problem) {
  const ModelParams& p = problem.params;
  const auto lv = label.levels();
  const QubitState init = problem.init_state();
  const auto tgt = detail::bloch_vector(problem.target_state());
  auto residual = [&](const std::array<double, 3>& x, std::array<double, 4>& r) {
    if (!(x[0] >= 0.0 && x[1] >= x[0] && x[2] >= x[1])) return false;
    const QubitState a = constant_propagator(x[0], p.u_max * level(lv[0]), p) * init;
    const QubitState b = constant_propagator(x[1] - x[0], 0.0, p) * a;
    const QubitState c = constant_propagator(x[2] - x[1], p.u_max * level(lv[2]), p) * b;
    const auto va = detail::bloch_vector(a);
    const auto vc = detail::bloch_vector(c);
    r = {va[2], vc[0] - tgt[0], vc[1] - tgt[1], vc[2] - tgt[2]};
    return true;
  };
  std::array<double, 3> x{t1, t2, T};
  std::array<double, 4> r{};
  if (!residual(x, r)) return std::nullopt;
  for (int it = 0; it < 60; ++it) {
    double norm = 0.0;
    for (double v : r) norm = std::max(norm, std::abs(v));
    if (norm < 1e-14) return x;
    std::array<std::array<double, 3>, 4> jac{};
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-7 * std::max(1.0, x[2]);
      auto xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      std::array<double, 4> rp{}, rm{};
      if (!residual(xp, rp) || !residual(xm, rm)) return std::nullopt;
      for (int i = 0; i < 4; ++i) jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
    }
    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jtr{};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b)
        for (int i = 0; i < 4; ++i) jtj[a][b] += jac[i][a] * jac[i][b];
      for (int i = 0; i < 4; ++i) jtr[a] += jac[i][a] * r[i];
    }
    std::array<double, 3> dx{};
    if (!detail::solve3(jtj, jtr, dx)) return std::nullopt;
    double lambda = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls) {
      std::array<double, 3> xn{x[0] - lambda * dx[0], x[1] - lambda * dx[1], x[2] - lambda * dx[2]};
      std::array<double, 4> rn{};
      if (residual(xn, rn)) {
        double nn = 0.0;
        for (double v : rn) nn = std::max(nn, std::abs(v));
        if (nn < norm) {
          x = xn;
          r = rn;
          moved = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    if (!moved) break;
  }
  double norm = 0.0;
  for (double v : r) norm = std::max(norm, std::abs(v));
  if (norm < 1e-10) return x;
  return std::nullopt;
}

namespace detail {

struct ScanState {
  StructureLabel label;
  std::vector<double> warm;
  double warm_T = 0.0;
  std::vector<std::pair<double, double>> history;  ///< (T, C + 1)
  bool done = false;
};

}  // namespace detail

/// Smallest T at which some candidate structure reaches C <= -1 + tol and
/// passes the first-order optimality audit. Each structure is scanned on a
/// coarse T grid; a hit (or a local dip of C + 1 that golden-section
/// refinement pushes below tol) is bisected down to `time_resolution`.
inline SearchResult find_time_optimal(const StatePrepProblem& problem, const SearchConfig& cfg = {}) {
  problem.validate();
  const ModelParams& p = problem.params;
  const double T_max = cfg.T_max > 0.0 ? cfg.T_max : 2.0 * M_PI / p.u_max;
  const int k_cap = static_cast<int>(std::ceil(p.omega0 * T_max / M_PI)) + cfg.extra_switchings;
  auto labels = cfg.structures.empty() ? default_structures(k_cap) : cfg.structures;
  if (labels.empty()) throw ValidationError("find_time_optimal: empty structure set");

  std::vector<detail::ScanState> states;
  for (const auto& l : labels) states.push_back({l, {}, 0.0, {}, false});

  SearchResult best;
  best.T_star = std::numeric_limits<double>::infinity();
  const double tol = cfg.tol_fidelity;

  auto gap = [&](detail::ScanState& s, double T) {
    const std::vector<double> w = s.warm.empty() ? std::vector<double>{} : detail::scaled(s.warm, s.warm_T, T);
    auto r = optimize_structure(s.label, T, problem, cfg.nm, w.empty() ? nullptr : &w);
    s.warm = r.times;
    s.warm_T = T;
    return std::pair{r.cost + 1.0, r};
  };

  auto audit = [&](detail::ScanState& s, double T_hit, StructureOptimum hit) {
    CandidateRecord rec{s.label, T_hit, hit.cost, false, ""};
    SearchResult cand;
    cand.found = true;
    cand.T_star = T_hit;
    cand.structure = s.label;
    cand.switch_times = hit.times;
    cand.cost = hit.cost;
    const auto durations = segment_durations(hit.times, T_hit);
    for (double d : durations)
      if (d < 1e-5 * T_hit) rec.note = "degenerate segment; reduces to fewer switchings";
    if (s.label.kind == StructureKind::BB && s.label.switchings >= 3) {
      double lo = durations[1], hi = durations[1];
      for (std::size_t i = 1; i + 1 < durations.size(); ++i) {
        lo = std::min(lo, durations[i]);
        hi = std::max(hi, durations[i]);
      }
      if (hi - lo > 1e-3 * hi) rec.note = "middle bangs differ in duration";
    }
    if (rec.note.empty() && s.label.kind == StructureKind::BSB) {
      const auto pol = polish_bsb(s.label, hit.times[0], hit.times[1], T_hit, problem);
      if (!pol) {
        rec.note = "singular segment cannot be placed on the equator";
      } else {
        cand.switch_times = {(*pol)[0], (*pol)[1]};
        cand.T_star = (*pol)[2];
        cand.cost = cost_of_switchings(cand.switch_times, s.label.levels(), cand.T_star, problem);
        cand.singular_duration = (*pol)[1] - (*pol)[0];
        if (cand.singular_duration < cfg.singular_min_fraction * cand.T_star)
          rec.note = "singular segment vanishes";
        if (std::abs(cand.T_star - T_hit) > 0.05 * T_hit) rec.note = "equator solution far from the scanned optimum";
      }
    }
    if (rec.note.empty()) {
      const double Ta = cfg.audit_fraction * cand.T_star;
      auto w = detail::scaled(cand.switch_times, cand.T_star, Ta);
      auto at = optimize_structure(s.label, Ta, problem, cfg.nm, &w);
      cand.audit_T = Ta;
      cand.report = optimality_report(make_bang_sequence(s.label, at.times, Ta, p.u_max), p, problem.cost_spec(),
                                      cfg.report);
      if (cand.report.sign_fraction < cfg.sign_min)
        rec.note = "switching-function sign test failed (" + std::to_string(cand.report.sign_fraction) + ")";
      else if (cand.report.hoc_max_dev >= cfg.hoc_tolerance)
        rec.note = "H_oc not constant on segments";
    }
    rec.accepted = rec.note.empty();
    if (rec.accepted) rec.note = "accepted";
    best.candidates.push_back(rec);
    if (!rec.accepted) return;
    const bool better = cand.T_star < best.T_star - cfg.time_resolution * 10.0 ||
                        (std::abs(cand.T_star - best.T_star) <= cfg.time_resolution * 10.0 &&
                         s.label.switchings < best.structure.switchings);
    if (!best.found || better) {
      auto keep = std::move(best.candidates);
      best = std::move(cand);
      best.candidates = std::move(keep);
    }
  };

  // Left-flank bisection: lo has C + 1 > tol, hi has C + 1 <= tol.
  auto bisect = [&](detail::ScanState& s, double lo, double hi, StructureOptimum hit) {
    while (hi - lo > cfg.time_resolution) {
      const double mid = 0.5 * (lo + hi);
      auto w = detail::scaled(hit.times, hi, mid);
      auto r = optimize_structure(s.label, mid, problem, cfg.nm, w.empty() ? nullptr : &w);
      if (r.cost + 1.0 <= tol) {
        hi = mid;
        hit = r;
      } else {
        lo = mid;
      }
    }
    return std::pair{hi, hit};
  };

  const double step = cfg.coarse_step;
  for (int j = 1;; ++j) {
    const double T = step * j;
    if (T > T_max + 1e-12) break;
    if (best.found && T > best.T_star + 2.0 * step) break;
    const int allowed = static_cast<int>(std::ceil(p.omega0 * T / M_PI)) + cfg.extra_switchings;
    for (auto& s : states) {
      if (s.done || s.label.switchings > allowed) continue;
      if (best.found && T - 2.0 * step > best.T_star) continue;
      auto [g, r] = gap(s, T);
      auto& h = s.history;
      if (g <= tol) {
        const double lo = h.empty() ? 0.0 : h.back().first;
        if (lo <= 0.0) {
          s.done = true;
          auto [Th, hit] = bisect(s, 1e-9, T, r);
          audit(s, Th, hit);
        } else {
          s.done = true;
          auto [Th, hit] = bisect(s, lo, T, r);
          audit(s, Th, hit);
        }
        continue;
      }
      h.push_back({T, g});
      const std::size_t m = h.size();
      if (m >= 3 && h[m - 2].second <= h[m - 3].second && h[m - 2].second <= h[m - 1].second &&
          h[m - 2].second < cfg.dip_threshold) {
        const double a = h[m - 3].first, b = h[m - 1].first;
        StructureOptimum at_min;
        std::vector<double> w = s.warm;
        double wT = s.warm_T;
        auto f = [&](double t) {
          auto ws = detail::scaled(w, wT, t);
          auto rr = optimize_structure(s.label, t, problem, cfg.nm, ws.empty() ? nullptr : &ws);
          return rr.cost + 1.0;
        };
        const auto [tm, gm] = optim::golden_section(f, a, b, 1e-9);
        if (gm <= tol) {
          auto ws = detail::scaled(w, wT, tm);
          at_min = optimize_structure(s.label, tm, problem, cfg.nm, ws.empty() ? nullptr : &ws);
          if (at_min.cost + 1.0 <= tol) {
            s.done = true;
            auto [Th, hit] = bisect(s, a, tm, at_min);
            audit(s, Th, hit);
          }
        }
      }
    }
  }
  return best;
}

/// Amplitude where the time-optimal BSB loses its singular segment, by
/// bisection on u_max until the bracket is narrower than `resolution`.
inline double critical_amplitude(StatePrepProblem problem, double u_lo, double u_hi, const SearchConfig& cfg = {},
                                 double resolution = 1e-2) {
  if (!(u_lo > 0.0 && u_lo < u_hi)) throw ValidationError("critical_amplitude: need 0 < u_lo < u_hi");
  auto bsb_optimal = [&](double u) {
    problem.params.u_max = u;
    const auto r = find_time_optimal(problem, cfg);
    return r.found && r.structure.kind == StructureKind::BSB &&
           r.singular_duration > cfg.singular_min_fraction * r.T_star;
  };
  if (!bsb_optimal(u_hi)) throw ValidationError("critical_amplitude: BSB is not optimal at the upper bracket end");
  if (bsb_optimal(u_lo)) throw ValidationError("critical_amplitude: BSB is still optimal at the lower bracket end");
  while (u_hi - u_lo > resolution) {
    const double mid = 0.5 * (u_lo + u_hi);
    if (bsb_optimal(mid))
      u_hi = mid;
    else
      u_lo = mid;
  }
  return 0.5 * (u_lo + u_hi);
}

}  // namespace qtoc
