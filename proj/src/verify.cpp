#include "desing/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "desing/baselines.hpp"
#include "desing/calculus.hpp"
#include "desing/completion.hpp"
#include "desing/geometries.hpp"
#include "desing/linalg.hpp"
#include "desing/retraction.hpp"
#include "desing/solvers.hpp"

namespace desing {

namespace {

constexpr double kAlphas[] = {0.05, 0.5, 5.0};

std::uint64_t mix(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Worst value seen so far together with where it happened.
struct Worst {
  double value = -std::numeric_limits<double>::infinity();
  std::string where;
  void max(double v, const std::string& at) {
    if (!(v <= value)) {  // also catches NaN
      value = v;
      where = at;
    }
  }
  void min(double v, const std::string& at) {
    if (!(v >= value) || value == -std::numeric_limits<double>::infinity()) {
      value = v;
      where = at;
    }
  }
};

CheckResult at_most(std::string name, const Worst& w, double thr) {
  CheckResult c;
  c.name = std::move(name);
  c.measured = w.value;
  c.threshold = thr;
  c.relation = "<=";
  c.passed = w.value <= thr;
  c.detail = w.where;
  return c;
}

CheckResult at_least(std::string name, const Worst& w, double thr) {
  CheckResult c;
  c.name = std::move(name);
  c.measured = w.value;
  c.threshold = thr;
  c.relation = ">=";
  c.passed = w.value >= thr;
  c.detail = w.where;
  return c;
}

std::string tag(int trial, double alpha) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "trial %d, alpha %g", trial, alpha);
  return buf;
}

// Four singular-value regimes: the small initialization range, a
// well-conditioned range, a spread spectrum, and exact rank deficiency.
ManifoldPoint sample_point(const ManifoldDims& d, std::uint64_t seed, int variant) {
  switch (variant % 4) {
    case 0:
      return random_point(d, seed, {0.0, 1e-3});
    case 1:
      return random_point(d, seed, {0.1, 1.0});
    default: {
      ManifoldPoint base = random_point(d, seed, {0.5, 1.5});
      Vector s = base.sigma();
      for (Index i = 0; i < d.r; ++i) {
        if (variant % 4 == 2) {
          s(i) *= std::pow(10.0, -3.0 * static_cast<double>(i) / std::max<Index>(1, d.r - 1));
        } else if (i >= (d.r + 1) / 2) {
          s(i) = 0.0;
        }
      }
      return ManifoldPoint(base.U(), s, base.V());
    }
  }
}

AmbientVector random_ambient(Index m, Index n, std::mt19937_64& rng) {
  Matrix y = linalg::gaussian(m, n, rng);
  Matrix z = linalg::gaussian(n, n, rng);
  Matrix zs = 0.5 * (z + z.transpose());
  return AmbientVector(std::move(y), std::move(zs));
}

double ambient_norm(const AmbientVector& a, const MetricParam& metric) {
  return std::sqrt(ambient_inner(a, a, metric));
}

AmbientVector minus(const AmbientVector& a, const AmbientVector& b) {
  AmbientVector out;
  out.Y = a.Y - b.Y;
  out.Z = a.Z - b.Z;
  return out;
}

double tangent_distance(const ManifoldPoint& pt, const TangentVector& a, const TangentVector& b,
                        const MetricParam& metric) {
  return norm(pt, a - b, metric);
}

double cost_along(const CostModel& f, const ManifoldPoint& pt, const TangentVector& t, double s,
                  const MetricParam& metric) {
  return f.value(factored(retract_polar(pt, s * t, metric)));
}

std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> s(count);
  for (int i = 0; i < count; ++i) {
    const double e = std::log10(lo) + (std::log10(hi) - std::log10(lo)) * i / (count - 1);
    s[i] = std::pow(10.0, e);
  }
  return s;
}

CompletionProblem small_completion(Index m, Index n, Index r, std::uint64_t seed,
                                   double oversampling = 5.0) {
  GeneratorParams p;
  p.m = m;
  p.n = n;
  p.r_star = r;
  p.r = r;
  p.oversampling = oversampling;
  p.sv = SvSpec::uniform(0.5, 1.0);
  p.seed = seed;
  return generate_problem(p);
}

QuadraticCost weighted_quadratic(Index m, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix a = linalg::gaussian(m, n, rng) / std::sqrt(static_cast<double>(n));
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  Matrix w(m, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) {
      w(i, j) = unif(rng);
    }
  }
  return QuadraticCost(std::move(a), std::move(w));
}

// |<u, H v> - <H u, v>| / (||u|| ||H v|| + ||H u|| ||v||).
double symmetry_residual(double uhv, double huv, double nu, double nhv, double nhu, double nv) {
  const double scale = nu * nhv + nhu * nv;
  return scale > 0.0 ? std::abs(uhv - huv) / scale : 0.0;
}

// ---------------------------------------------------------------- calculus

void calculus_for_cost(const std::string& label, const CostModel& f, std::uint64_t seed,
                       Suite& out) {
  const ManifoldDims d(f.rows(), f.cols(), 5);

  Worst grad_err;
  for (int p = 0; p < 20; ++p) {
    const MetricParam metric(kAlphas[p % 3]);
    const ManifoldPoint pt = sample_point(d, mix(seed, p), p);
    const auto model = f.at(factored(pt));
    const TangentVector g = riemannian_gradient(pt, *model, metric);
    const double gnorm = norm(pt, g, metric);
    for (int k = 0; k < 20; ++k) {
      const TangentVector t = random_tangent(pt, metric, mix(seed, 1000 + 20 * p + k));
      const double h = 1e-5;
      const double fd = (cost_along(f, pt, t, h, metric) - cost_along(f, pt, t, -h, metric)) /
                        (2.0 * h);
      const double an = inner(pt, g, t, metric);
      const double scale = std::max(std::abs(an), gnorm);
      grad_err.max(scale > 0.0 ? std::abs(fd - an) / scale : std::abs(fd),
                   tag(p, metric.alpha()) + ", dir " + std::to_string(k));
    }
  }
  out.push_back(at_most("gradient_fd_" + label, grad_err, 1e-5));

  Worst sym;
  Worst qform;
  for (int p = 0; p < 50; ++p) {
    const MetricParam metric(kAlphas[p % 3]);
    const ManifoldPoint pt = sample_point(d, mix(seed, 5000 + p), p);
    const auto model = f.at(factored(pt));
    const TangentVector u = random_tangent(pt, metric, mix(seed, 6000 + p));
    const TangentVector v = random_tangent(pt, metric, mix(seed, 7000 + p));
    const TangentVector hu = hessian_vec(pt, u, *model, metric);
    const TangentVector hv = hessian_vec(pt, v, *model, metric);
    sym.max(symmetry_residual(inner(pt, u, hv, metric), inner(pt, hu, v, metric),
                                    norm(pt, u, metric), norm(pt, hv, metric),
                                    norm(pt, hu, metric), norm(pt, v, metric)),
            tag(p, metric.alpha()));

    // <Xdot, Hess f[Xdot]> + 2 <K, M grad f Vp>, all dense.
    const Matrix xdot = factored(pt, u).dense();
    const Matrix hess_xdot =
        model->hess_right(factored(pt, u), Matrix::Identity(d.n, d.n));
    const Matrix grad = *model->dense_gradient();
    const Vector s = sfactor(pt, metric);
    Vector w(d.r);
    for (Index i = 0; i < d.r; ++i) {
      w(i) = pt.sigma()(i) * pt.sigma()(i) / s(i);
    }
    const Matrix mmat = Matrix::Identity(d.m, d.m) - pt.U() * w.asDiagonal() * pt.U().transpose();
    const double t1 = (xdot.array() * hess_xdot.array()).sum();
    const double t2 = 2.0 * (u.K.array() * (mmat * grad * u.Vp).array()).sum();
    const double oracle = t1 + t2;
    const double value = inner(pt, u, hu, metric);
    const double scale = std::abs(t1) + std::abs(t2);
    qform.max(scale > 0.0 ? std::abs(value - oracle) / scale : std::abs(value),
              tag(p, metric.alpha()));
  }
  out.push_back(at_most("hessian_symmetry_" + label, sym, 1e-11));
  out.push_back(at_most("hessian_quadratic_form_" + label, qform, 1e-11));

  Worst slope;
  const std::vector<double> grid = log_grid(1e-4, 1e-1, 13);
  for (int p = 0; p < 8; ++p) {
    const MetricParam metric(kAlphas[p % 3]);
    const ManifoldPoint pt = sample_point(d, mix(seed, 9000 + p), p);
    const auto model = f.at(factored(pt));
    const TangentVector t = random_tangent(pt, metric, mix(seed, 9500 + p));
    const double g0 = model->value();
    const double d1 = inner(pt, riemannian_gradient(pt, *model, metric), t, metric);
    const double d2 = inner(pt, t, hessian_vec(pt, t, *model, metric), metric);
    std::vector<double> err;
    for (double s : grid) {
      err.push_back(std::abs(cost_along(f, pt, t, s, metric) - g0 - s * d1 - 0.5 * s * s * d2));
    }
    // Samples within a thousand ulps of g0 measure rounding, not the remainder.
    const double floor = 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(g0));
    slope.min(loglog_slope(grid, err, floor), tag(p, metric.alpha()));
  }
  out.push_back(at_least("hessian_taylor_slope_" + label, slope, 2.9));
}

}  // namespace

double loglog_slope(const std::vector<double>& s, const std::vector<double>& err, double floor) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < s.size() && i < err.size(); ++i) {
    if (err[i] > floor) {
      xs.push_back(std::log10(s[i]));
      ys.push_back(std::log10(err[i]));
    }
  }
  const std::size_t n = xs.size();
  if (n < 3) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  // Fit every run of consecutive samples covering half of them and keep the
  // straightest one: far from 0 higher-order terms bend the curve.
  const std::size_t len = std::max<std::size_t>(3, (n + 1) / 2);
  double best_slope = std::numeric_limits<double>::quiet_NaN();
  double best_res = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a + len <= n; ++a) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = a; i < a + len; ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double k = static_cast<double>(len);
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / k;
    double res = 0.0;
    for (std::size_t i = a; i < a + len; ++i) {
      const double e = ys[i] - (icpt + slope * xs[i]);
      res += e * e;
    }
    if (res < best_res) {
      best_res = res;
      best_slope = slope;
    }
  }
  return best_slope;
}

// ---------------------------------------------------------------- geometry

Suite verify_geometry(std::uint64_t seed) {
  const ManifoldDims shapes[] = {{6, 5, 2}, {12, 10, 3}, {8, 12, 4}, {12, 12, 1}, {9, 7, 5}};
  Worst inner_err, idem, pyth, normal, dense_vs_structured, vp_orth;
  int trial = 0;
  for (const ManifoldDims& d : shapes) {
    for (int k = 0; k < 20; ++k, ++trial) {
      const MetricParam metric(kAlphas[trial % 3]);
      std::mt19937_64 rng(mix(seed, trial));
      const ManifoldPoint pt = sample_point(d, mix(seed, 100 + trial), trial);
      const std::string at = tag(trial, metric.alpha());

      const TangentVector a = random_tangent(pt, metric, mix(seed, 200 + trial));
      const TangentVector b = random_tangent(pt, metric, mix(seed, 300 + trial));
      const double amb = ambient_inner(tangent_to_ambient(pt, a), tangent_to_ambient(pt, b), metric);
      inner_err.max(std::abs(inner(pt, a, b, metric) - amb) /
                        (norm(pt, a, metric) * norm(pt, b, metric)),
                    at);

      const AmbientVector y = random_ambient(d.m, d.n, rng);
      const TangentVector py = project(pt, DenseAmbient(y), metric);
      const AmbientVector pya = tangent_to_ambient(pt, py);
      const TangentVector ppy = project(pt, DenseAmbient(pya), metric);
      const double npy = norm(pt, py, metric);
      idem.max(tangent_distance(pt, ppy, py, metric) / npy, at);

      const double ny2 = ambient_inner(y, y, metric);
      const double nr2 = ambient_inner(minus(y, pya), minus(y, pya), metric);
      pyth.max(std::abs(ny2 - npy * npy - nr2) / ny2, at);

      const TangentVector pdense = project(pt, y, metric);
      dense_vs_structured.max(tangent_distance(pt, pdense, py, metric) / npy, at);
      vp_orth.max((pt.V().transpose() * py.Vp).norm() / std::max(1.0, py.Vp.norm()), at);

      const AmbientVector nv = normal_sample(pt, metric, mix(seed, 400 + trial));
      const double nn = ambient_norm(nv, metric);
      normal.max(nn > 0.0 ? norm(pt, project(pt, DenseAmbient(nv), metric), metric) / nn : 0.0,
                 at);
    }
  }
  Suite out;
  out.push_back(at_most("inner_matches_ambient", inner_err, 1e-12));
  out.push_back(at_most("project_idempotent", idem, 1e-10));
  out.push_back(at_most("project_pythagorean", pyth, 1e-10));
  out.push_back(at_most("project_structured_matches_dense", dense_vs_structured, 1e-12));
  out.push_back(at_most("project_vp_orthogonal_to_v", vp_orth, 1e-12));
  out.push_back(at_most("normal_space_projects_to_zero", normal, 1e-12));
  return out;
}

// ------------------------------------------------------------- retractions

namespace {

double alpha_distance(const std::pair<Matrix, Matrix>& target, const ManifoldPoint& q,
                      const MetricParam& metric) {
  const auto [x, p] = to_dense(q);
  return std::sqrt((target.first - x).squaredNorm() +
                   metric.alpha() * (target.second - p).squaredNorm());
}

ManifoldPoint retract_kind(const ManifoldPoint& pt, const TangentVector& t,
                           const MetricParam& metric, RetractionKind kind) {
  switch (kind) {
    case RetractionKind::QFactor:
      return retract_qfactor(pt, t);
    case RetractionKind::MetricProjection:
      return retract_metric_projection(pt, t, metric).point;
    case RetractionKind::Polar:
      return retract_polar(pt, t, metric);
  }
  throw InvalidArgument("unknown retraction");
}

}  // namespace

Suite verify_retractions(std::uint64_t seed) {
  const ManifoldDims shapes[] = {{7, 5, 2}, {10, 8, 3}, {12, 12, 4}, {9, 11, 1}, {15, 10, 5}};
  const RetractionKind kinds[] = {RetractionKind::QFactor, RetractionKind::MetricProjection,
                                  RetractionKind::Polar};
  const double scales[] = {0.1, 0.5, 1.0, 2.0, 5.0};
  Worst identity[3], first_order[3], accel[3], optimal;
  const std::vector<double> grid = log_grid(1e-4, 1e-1, 7);

  for (int trial = 0; trial < 50; ++trial) {
    const ManifoldDims& d = shapes[trial % 5];
    const MetricParam metric(kAlphas[trial % 3]);
    const ManifoldPoint pt = sample_point(d, mix(seed, trial), trial / 5);
    const TangentVector unit = random_tangent(pt, metric, mix(seed, 100 + trial));
    const std::string at = tag(trial, metric.alpha());
    const auto base = to_dense(pt);
    const AmbientVector udot = tangent_to_ambient(pt, unit);

    for (int k = 0; k < 3; ++k) {
      const ManifoldPoint r0 = retract_kind(pt, TangentVector::zero(d), metric, kinds[k]);
      const auto [x0, p0] = to_dense(r0);
      identity[k].max(std::sqrt((x0 - base.first).squaredNorm() +
                                metric.alpha() * (p0 - base.second).squaredNorm()),
                      at);

      std::vector<double> err;
      for (double s : grid) {
        const auto [xs, ps] = to_dense(retract_kind(pt, s * unit, metric, kinds[k]));
        err.push_back(std::sqrt((xs - base.first - s * udot.Y).squaredNorm() +
                                metric.alpha() * (ps - base.second - s * udot.Z).squaredNorm()));
      }
      first_order[k].min(loglog_slope(grid, err, 1e-13), at);
    }

    const double scale = scales[trial % 5];
    const TangentVector t = scale * unit;
    for (int k : {1, 2}) {
      accel[k].max(intrinsic_acceleration_residual(pt, t, metric, kinds[k]) / (1.0 + scale * scale),
                   at);
    }

    AmbientVector tdot = tangent_to_ambient(pt, t);
    const std::pair<Matrix, Matrix> target{base.first + tdot.Y, base.second + tdot.Z};
    const double dq = alpha_distance(target, retract_qfactor(pt, t), metric);
    const double dm = alpha_distance(target, retract_metric_projection(pt, t, metric).point, metric);
    const double dp = alpha_distance(target, retract_polar(pt, t, metric), metric);
    const double best_other = std::min(dq, dp);
    optimal.max((dm - best_other) / std::max(1.0, best_other), at);
  }

  Suite out;
  for (int k = 0; k < 3; ++k) {
    const std::string name(to_string(kinds[k]));
    out.push_back(at_most("retraction_identity_at_zero_" + name, identity[k], 1e-12));
    out.push_back(at_least("retraction_first_order_slope_" + name, first_order[k], 1.9));
  }
  out.push_back(at_most("intrinsic_acceleration_metric_projection", accel[1], 1e-5));
  out.push_back(at_most("intrinsic_acceleration_polar", accel[2], 1e-5));
  out.push_back(at_most("metric_projection_is_nearest", optimal, 1e-12));
  return out;
}

// ---------------------------------------------------------------- calculus

Suite verify_calculus(std::uint64_t seed) {
  Suite out;
  const CompletionProblem prob = small_completion(50, 50, 5, mix(seed, 1));
  const CompletionCost completion(prob);
  calculus_for_cost("completion", completion, mix(seed, 2), out);
  const QuadraticCost quadratic = weighted_quadratic(50, 50, mix(seed, 3));
  calculus_for_cost("quadratic", quadratic, mix(seed, 4), out);
  return out;
}

// ------------------------------------------------------------------ bounds

namespace {

// Wraps the desingularization adapter and checks the gradient bound at every
// point the solver evaluates.
class BoundCheckingGeometry {
 public:
  using Point = DesingGeometry::Point;
  using Tangent = DesingGeometry::Tangent;
  using Eval = DesingGeometry::Eval;

  BoundCheckingGeometry(const DesingGeometry& inner, Worst& worst)
      : inner_(inner), worst_(worst) {}

  Eval evaluate(const Point& x) const {
    Eval e = inner_.evaluate(x);
    const double euclid = e.model->dense_gradient()->norm();
    const double riem = std::sqrt(inner_.inner(x, e.grad, e.grad));
    worst_.max(euclid > 0.0 ? riem / euclid : 0.0, "solver iterate");
    return e;
  }
  double cost(const Point& x) const { return inner_.cost(x); }
  Tangent hess(const Point& x, const Eval& e, const Tangent& v) const {
    return inner_.hess(x, e, v);
  }
  double inner(const Point& x, const Tangent& a, const Tangent& b) const {
    return inner_.inner(x, a, b);
  }
  std::optional<Point> retract(const Point& x, const Tangent& v, RetractionStats& st) const {
    return inner_.retract(x, v, st);
  }
  Index dimension(const Point& x) const { return inner_.dimension(x); }

 private:
  const DesingGeometry& inner_;
  Worst& worst_;
};

}  // namespace

Suite verify_bounds(std::uint64_t seed) {
  const ManifoldDims d(40, 40, 3);
  const CompletionProblem prob = small_completion(40, 40, 3, mix(seed, 1));
  const CompletionCost completion(prob);
  const QuadraticCost quadratic = weighted_quadratic(40, 40, mix(seed, 2));
  const CostModel* costs[] = {&completion, &quadratic};

  Worst grad_ratio, hess_excess;
  for (int c = 0; c < 2; ++c) {
    for (int trial = 0; trial < 20; ++trial) {
      const MetricParam metric(kAlphas[trial % 3]);
      const ManifoldPoint pt = sample_point(d, mix(seed, 100 * c + trial), trial);
      const auto model = costs[c]->at(factored(pt));
      const std::string at = std::string(c == 0 ? "completion, " : "quadratic, ") +
                             tag(trial, metric.alpha());
      const TangentVector g = riemannian_gradient(pt, *model, metric);
      grad_ratio.max(norm(pt, g, metric) / model->dense_gradient()->norm(), at);
      const double est = hessian_op_norm_estimate(pt, *model, metric, 300, mix(seed, 500 + trial));
      hess_excess.max(est - hessian_norm_bound(pt, *model, metric), at);
    }
    for (double alpha : kAlphas) {
      const MetricParam metric(alpha);
      const DesingGeometry geom(*costs[c], metric);
      BoundCheckingGeometry checking(geom, grad_ratio);
      SolverConfig cfg;
      cfg.max_outer_iters = 25;
      trust_region(checking, random_point(d, mix(seed, 900 + c)), cfg);
    }
  }
  Suite out;
  out.push_back(at_most("grad_norm_bounded_by_euclidean", grad_ratio, 1.0 + 1e-12));
  out.push_back(at_most("hessian_norm_bound_holds", hess_excess, 1e-8));
  return out;
}

// --------------------------------------------------------------- baselines

Suite verify_baselines(std::uint64_t seed) {
  const Index m = 30, n = 30, r = 4;
  const ManifoldDims d(m, n, r);
  const CompletionProblem prob = small_completion(m, n, r, mix(seed, 1), 3.0);
  const CompletionCost completion(prob);
  const QuadraticCost quadratic = weighted_quadratic(m, n, mix(seed, 2));
  const CostModel* costs[] = {&completion, &quadratic};
  const char* labels[] = {"completion", "quadratic"};

  Suite out;
  for (int c = 0; c < 2; ++c) {
    const CostModel& f = *costs[c];
    Worst lr_err, fr_err, lr_sym, fr_sym;
    for (int p = 0; p < 10; ++p) {
      const ManifoldPoint pt = sample_point(d, mix(seed, 100 * c + p), 1 + 2 * (p % 2));
      std::mt19937_64 rng(mix(seed, 1000 + 100 * c + p));

      const LRPoint lp = p % 2 == 0 ? lr_balanced(pt)
                                    : LRPoint{linalg::gaussian(m, r, rng), linalg::gaussian(n, r, rng)};
      const auto lmodel = f.at(lp.factored());
      const LRTangent lg = lr_gradient(lp, *lmodel);
      const double lgn = std::sqrt(lr_inner(lg, lg));

      const FixedRankPoint fp(random_point(d, mix(seed, 2000 + 100 * c + p), {0.1, 1.0}));
      const auto fmodel = f.at(fp.factored());
      const FixedRankTangent fg = fixedrank_gradient(fp, *fmodel);
      const double fgn = std::sqrt(fixedrank_inner(fg, fg));

      auto random_fr = [&]() {
        FixedRankTangent t{linalg::gaussian(r, r, rng), linalg::gaussian(m, r, rng),
                           linalg::gaussian(n, r, rng)};
        t.Up -= fp.U() * (fp.U().transpose() * t.Up);
        t.Vp -= fp.V() * (fp.V().transpose() * t.Vp);
        t *= 1.0 / std::sqrt(fixedrank_inner(t, t));
        return t;
      };
      auto random_lr = [&]() {
        LRTangent t{linalg::gaussian(m, r, rng), linalg::gaussian(n, r, rng)};
        t *= 1.0 / std::sqrt(lr_inner(t, t));
        return t;
      };

      for (int k = 0; k < 10; ++k) {
        const std::string at = "point " + std::to_string(p) + ", dir " + std::to_string(k);
        const double h = 1e-5;

        const LRTangent lt = random_lr();
        const double lfd = (f.value(lr_retract(lp, h * lt).factored()) -
                            f.value(lr_retract(lp, -h * lt).factored())) /
                           (2.0 * h);
        const double lan = lr_inner(lg, lt);
        lr_err.max(std::abs(lfd - lan) / std::max(std::abs(lan), lgn), at);

        const FixedRankTangent ft = random_fr();
        const double ffd = (f.value(fixedrank_retract(fp, h * ft).factored()) -
                            f.value(fixedrank_retract(fp, -h * ft).factored())) /
                           (2.0 * h);
        const double fan = fixedrank_inner(fg, ft);
        fr_err.max(std::abs(ffd - fan) / std::max(std::abs(fan), fgn), at);

        const LRTangent lu = random_lr();
        const LRTangent hlt = lr_hessian_vec(lp, lt, *lmodel);
        const LRTangent hlu = lr_hessian_vec(lp, lu, *lmodel);
        lr_sym.max(symmetry_residual(lr_inner(lu, hlt), lr_inner(hlu, lt), 1.0,
                                           std::sqrt(lr_inner(hlt, hlt)),
                                           std::sqrt(lr_inner(hlu, hlu)), 1.0),
                   at);

        const FixedRankTangent fu = random_fr();
        const FixedRankTangent hft = fixedrank_hessian_vec(fp, ft, *fmodel);
        const FixedRankTangent hfu = fixedrank_hessian_vec(fp, fu, *fmodel);
        fr_sym.max(symmetry_residual(fixedrank_inner(fu, hft), fixedrank_inner(hfu, ft),
                                           1.0, std::sqrt(fixedrank_inner(hft, hft)),
                                           std::sqrt(fixedrank_inner(hfu, hfu)), 1.0),
                   at);
      }
    }
    const std::string label = labels[c];
    out.push_back(at_most("lr_gradient_fd_" + label, lr_err, 1e-5));
    out.push_back(at_most("fixedrank_gradient_fd_" + label, fr_err, 1e-5));
    out.push_back(at_most("lr_hessian_symmetry_" + label, lr_sym, 1e-11));
    out.push_back(at_most("fixedrank_hessian_symmetry_" + label, fr_sym, 1e-11));
  }

  Worst agree;
  for (int p = 0; p < 20; ++p) {
    const ManifoldPoint pt = random_point(d, mix(seed, 5000 + p), p % 2 ? SigmaRange{0.1, 1.0}
                                                                        : SigmaRange{1e-4, 1e-3});
    for (int c = 0; c < 2; ++c) {
      const CostModel& f = *costs[c];
      const double a = DesingGeometry(f, MetricParam(0.5)).cost(pt);
      const double b = LRGeometry(f).cost(lr_balanced(pt));
      const double e = FixedRankGeometry(f).cost(FixedRankPoint(pt));
      const double scale = std::max({std::abs(a), std::abs(b), std::abs(e)});
      const double spread = std::max({a, b, e}) - std::min({a, b, e});
      agree.max(scale > 0.0 ? spread / scale : 0.0,
                std::string(labels[c]) + ", point " + std::to_string(p));
    }
  }
  out.push_back(at_most("cost_agreement_across_geometries", agree, 1e-12));
  return out;
}

bool print_suite(std::ostream& os, const std::string& title, const Suite& suite) {
  bool ok = true;
  for (const CheckResult& c : suite) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "measured=%.3e %s %.3e", c.measured, c.relation.c_str(),
                  c.threshold);
    os << (c.passed ? "PASS " : "FAIL ") << title << "/" << c.name << "  " << buf;
    if (!c.passed && !c.detail.empty()) {
      os << "  (worst: " << c.detail << ")";
    }
    os << "\n";
    ok = ok && c.passed;
  }
  return ok;
}

}  // namespace desing
