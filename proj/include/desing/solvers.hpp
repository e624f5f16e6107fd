#pragma once

// Riemannian gradient descent (Armijo backtracking) and trust-region with a
// truncated conjugate gradient inner solver. Both are templates over a
// geometry adapter (see geometries.hpp), so one implementation drives every
// parameterization.

#include <chrono>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "desing/geometries.hpp"

namespace desing {

struct SolverConfig {
  Index max_outer_iters = 1000;
  double grad_tol = 1e-6;
  /// Stop when an accepted step lowers the cost by less than cost_tol * max(1, |f|).
  double cost_tol = 1e-16;
  /// 0 selects ||grad g(start)|| / 8.
  double tr_initial_radius = 0.0;
  /// 0 selects 100 x the initial radius.
  double tr_max_radius = 0.0;
  double tcg_theta = std::sqrt(2.0) - 1.0;
  double tcg_kappa = 0.1;
  /// 0 selects the manifold dimension.
  Index tcg_max_inner = 0;
  double ls_armijo_c = 1e-4;
  double ls_backtrack = 0.5;
  double ls_initial_step = 1.0;
  Index ls_max_backtracks = 60;
  RetractionKind retraction = RetractionKind::MetricProjection;

  void validate() const;
};

inline void SolverConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string(name) + " must be positive and finite");
    }
  };
  if (max_outer_iters < 0) {
    throw InvalidArgument("max_outer_iters must be non-negative");
  }
  positive(grad_tol, "grad_tol");
  positive(cost_tol, "cost_tol");
  positive(tcg_theta, "tcg_theta");
  positive(tcg_kappa, "tcg_kappa");
  positive(ls_armijo_c, "ls_armijo_c");
  positive(ls_initial_step, "ls_initial_step");
  if (tr_initial_radius < 0.0 || tr_max_radius < 0.0) {
    throw InvalidArgument("trust-region radii must be non-negative (0 selects the default)");
  }
  if (tr_initial_radius > 0.0 && tr_max_radius > 0.0 && tr_max_radius < tr_initial_radius) {
    throw InvalidArgument("tr_max_radius must not be below tr_initial_radius");
  }
  if (tcg_max_inner < 0 || ls_max_backtracks < 1) {
    throw InvalidArgument("iteration caps must be positive");
  }
  if (!(ls_backtrack > 0.0 && ls_backtrack < 1.0)) {
    throw InvalidArgument("ls_backtrack must lie in (0, 1)");
  }
  if (!(ls_armijo_c < 1.0)) {
    throw InvalidArgument("ls_armijo_c must be below 1");
  }
}

struct TraceRecord {
  Index iter = 0;
  double cost = 0.0;
  double grad_norm = 0.0;
  double step_norm = 0.0;
  /// Trust-region radius, or accepted step size for gradient descent.
  double radius_or_step = 0.0;
  Index inner_iters = 0;
  double wall_time_s = 0.0;
  Index retraction_fallbacks = 0;
};

enum class StopReason { GradTol, CostTol, MaxIters, LineSearchStalled };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::GradTol:
      return "grad_tol";
    case StopReason::CostTol:
      return "cost_tol";
    case StopReason::MaxIters:
      return "max_iters";
    case StopReason::LineSearchStalled:
      return "line_search_stalled";
  }
  return "unknown";
}

/// Row 0 is the start point; one row per accepted iteration follows.
struct SolverTrace {
  std::vector<TraceRecord> records;
  Index outer_iterations = 0;
  StopReason stop = StopReason::MaxIters;
  bool line_search_stalled = false;
  Index model_non_descent = 0;
  Index retraction_failures = 0;
};

template <class P>
struct SolverResult {
  P point;
  SolverTrace trace;
};

template <class G>
concept SolverGeometry = requires(const G& g, const typename G::Point& x,
                                  const typename G::Tangent& v, const typename G::Eval& e,
                                  RetractionStats& st) {
  { g.evaluate(x) } -> std::same_as<typename G::Eval>;
  { g.cost(x) } -> std::convertible_to<double>;
  { g.hess(x, e, v) } -> std::same_as<typename G::Tangent>;
  { g.inner(x, v, v) } -> std::convertible_to<double>;
  { g.retract(x, v, st) } -> std::same_as<std::optional<typename G::Point>>;
  { g.dimension(x) } -> std::convertible_to<Index>;
  { e.cost } -> std::convertible_to<double>;
  { -v } -> std::same_as<typename G::Tangent>;
  { v + v } -> std::same_as<typename G::Tangent>;
  { 2.0 * v } -> std::same_as<typename G::Tangent>;
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

template <class T>
struct TcgResult {
  T eta;
  T heta;
  Index inner_iters = 0;
  bool hit_boundary = false;
};

// Steihaug-Toint truncated CG on m(eta) = <g, eta> + 1/2 <eta, H eta> within
// ||eta|| <= radius, starting from eta = 0, with the Cauchy-point safeguard.
template <SolverGeometry G>
TcgResult<typename G::Tangent> truncated_cg(const G& geom, const typename G::Point& x,
                                            const typename G::Eval& ev, double grad_norm,
                                            double radius, const SolverConfig& cfg,
                                            Index max_inner) {
  using T = typename G::Tangent;
  const T& g = ev.grad;
  auto inner = [&](const T& a, const T& b) { return geom.inner(x, a, b); };
  auto model = [&](const T& eta, const T& heta) {
    return inner(g, eta) + 0.5 * inner(eta, heta);
  };

  T eta = 0.0 * g;
  T heta = 0.0 * g;
  T r = g;
  double r_r = grad_norm * grad_norm;
  const double norm_r0 = grad_norm;
  double e_pe = 0.0;
  double e_pd = 0.0;
  double d_pd = r_r;
  T delta = -r;
  double model_value = 0.0;
  std::optional<T> hg;  // Hess[g], available after the first inner step
  bool boundary = false;
  Index j = 0;
  const double r2 = radius * radius;

  while (j < max_inner) {
    T hdelta = geom.hess(x, ev, delta);
    ++j;
    if (!hg) {
      hg = -hdelta;
    }
    const double d_hd = inner(delta, hdelta);
    const double alpha = r_r / d_hd;
    const double e_pe_new = e_pe + 2.0 * alpha * e_pd + alpha * alpha * d_pd;
    if (!(d_hd > 0.0) || e_pe_new >= r2) {
      const double tau = (-e_pd + std::sqrt(e_pd * e_pd + d_pd * (r2 - e_pe))) / d_pd;
      eta = eta + tau * delta;
      heta = heta + tau * hdelta;
      boundary = true;
      break;
    }
    T eta_new = eta + alpha * delta;
    T heta_new = heta + alpha * hdelta;
    const double model_new = model(eta_new, heta_new);
    if (model_new >= model_value) {
      break;  // rounding has taken over; keep the previous iterate
    }
    eta = std::move(eta_new);
    heta = std::move(heta_new);
    model_value = model_new;
    e_pe = e_pe_new;

    r = r + alpha * hdelta;
    const double r_r_new = inner(r, r);
    const double norm_r = std::sqrt(r_r_new);
    if (norm_r <= norm_r0 * std::min(cfg.tcg_kappa, std::pow(norm_r0, cfg.tcg_theta))) {
      break;
    }
    const double beta = r_r_new / r_r;
    r_r = r_r_new;
    delta = -r + beta * delta;
    e_pd = beta * (e_pd + alpha * d_pd);
    d_pd = r_r + beta * beta * d_pd;
  }

  if (hg) {
    // Cauchy point along -g.
    const double ghg = inner(g, *hg);
    double tau_c = 1.0;
    if (ghg > 0.0) {
      tau_c = std::min(grad_norm * grad_norm * grad_norm / (radius * ghg), 1.0);
    }
    const double s = tau_c * radius / grad_norm;
    const double model_c = -s * grad_norm * grad_norm + 0.5 * s * s * ghg;
    if (model(eta, heta) > model_c) {
      eta = -s * g;
      heta = -s * *hg;
      boundary = tau_c >= 1.0;
    }
  }
  return {std::move(eta), std::move(heta), j, boundary};
}

}  // namespace detail

template <SolverGeometry G>
SolverResult<typename G::Point> gradient_descent(const G& geom, typename G::Point start,
                                                 const SolverConfig& cfg) {
  cfg.validate();
  using P = typename G::Point;
  detail::Stopwatch clock;
  RetractionStats stats;
  SolverTrace trace;

  P x = std::move(start);
  auto ev = geom.evaluate(x);
  double gn = std::sqrt(geom.inner(x, ev.grad, ev.grad));
  trace.records.push_back({0, ev.cost, gn, 0.0, 0.0, 0, clock.seconds(), 0});

  trace.stop = StopReason::MaxIters;
  for (Index k = 0; k < cfg.max_outer_iters; ++k) {
    if (gn <= cfg.grad_tol) {
      trace.stop = StopReason::GradTol;
      break;
    }
    ++trace.outer_iterations;
    double s = cfg.ls_initial_step;
    std::optional<P> accepted;
    for (Index b = 0; b < cfg.ls_max_backtracks; ++b, s *= cfg.ls_backtrack) {
      auto cand = geom.retract(x, -s * ev.grad, stats);
      if (!cand) {
        continue;
      }
      const double fc = geom.cost(*cand);
      if (fc <= ev.cost - cfg.ls_armijo_c * s * gn * gn) {
        accepted = std::move(cand);
        break;
      }
    }
    if (!accepted) {
      trace.stop = StopReason::LineSearchStalled;
      trace.line_search_stalled = true;
      break;
    }
    const double f_old = ev.cost;
    const double step_norm = s * gn;
    x = std::move(*accepted);
    ev = geom.evaluate(x);
    gn = std::sqrt(geom.inner(x, ev.grad, ev.grad));
    trace.records.push_back({k + 1, ev.cost, gn, step_norm, s, 0, clock.seconds(),
                             stats.fallbacks});
    if (f_old - ev.cost < cfg.cost_tol * std::max(1.0, std::abs(f_old)) &&
        gn > cfg.grad_tol) {
      trace.stop = StopReason::CostTol;
      break;
    }
  }
  if (trace.stop == StopReason::MaxIters && gn <= cfg.grad_tol) {
    trace.stop = StopReason::GradTol;
  }
  trace.retraction_failures = stats.failures;
  return {std::move(x), std::move(trace)};
}

template <SolverGeometry G>
SolverResult<typename G::Point> trust_region(const G& geom, typename G::Point start,
                                             const SolverConfig& cfg) {
  cfg.validate();
  using P = typename G::Point;
  detail::Stopwatch clock;
  RetractionStats stats;
  SolverTrace trace;

  P x = std::move(start);
  auto ev = geom.evaluate(x);
  double gn = std::sqrt(geom.inner(x, ev.grad, ev.grad));

  double radius = cfg.tr_initial_radius > 0.0 ? cfg.tr_initial_radius
                                              : (gn > 0.0 ? gn / 8.0 : 1.0);
  const double max_radius = cfg.tr_max_radius > 0.0 ? cfg.tr_max_radius : 100.0 * radius;
  radius = std::min(radius, max_radius);
  const Index max_inner = cfg.tcg_max_inner > 0 ? cfg.tcg_max_inner : geom.dimension(x);

  trace.records.push_back({0, ev.cost, gn, 0.0, radius, 0, clock.seconds(), 0});

  trace.stop = StopReason::MaxIters;
  for (Index k = 0; k < cfg.max_outer_iters; ++k) {
    if (gn <= cfg.grad_tol) {
      trace.stop = StopReason::GradTol;
      break;
    }
    ++trace.outer_iterations;
    auto sub = detail::truncated_cg(geom, x, ev, gn, radius, cfg, max_inner);
    const double model_dec =
        -(geom.inner(x, ev.grad, sub.eta) + 0.5 * geom.inner(x, sub.eta, sub.heta));
    if (!(model_dec > 0.0)) {
      ++trace.model_non_descent;
    }

    auto cand = geom.retract(x, sub.eta, stats);
    std::optional<typename G::Eval> ev_new;
    double rho = -std::numeric_limits<double>::infinity();
    if (cand) {
      ev_new.emplace(geom.evaluate(*cand));
      const double reg = 1e-15 * std::max(1.0, std::abs(ev.cost));
      rho = (ev.cost - ev_new->cost + reg) / (model_dec + reg);
    }
    const double step_norm = std::sqrt(std::max(0.0, geom.inner(x, sub.eta, sub.eta)));

    if (rho < 0.25) {
      radius *= 0.25;
    } else if (rho > 0.75 && sub.hit_boundary) {
      radius = std::min(2.0 * radius, max_radius);
    }

    if (cand && rho > 0.1 && ev_new->cost <= ev.cost) {
      const double f_old = ev.cost;
      x = std::move(*cand);
      ev = std::move(*ev_new);
      gn = std::sqrt(geom.inner(x, ev.grad, ev.grad));
      trace.records.push_back({k + 1, ev.cost, gn, step_norm, radius, sub.inner_iters,
                               clock.seconds(), stats.fallbacks});
      if (f_old - ev.cost < cfg.cost_tol * std::max(1.0, std::abs(f_old)) &&
          gn > cfg.grad_tol) {
        trace.stop = StopReason::CostTol;
        break;
      }
    }
  }
  if (trace.stop == StopReason::MaxIters && gn <= cfg.grad_tol) {
    trace.stop = StopReason::GradTol;
  }
  trace.retraction_failures = stats.failures;
  return {std::move(x), std::move(trace)};
}

}  // namespace desing
