#pragma once

// Adapters that present each parameterization through the interface the
// solvers consume: evaluate (cost + gradient + cached derivative model),
// cost, hess, inner, retract and dimension.

#include <memory>
#include <optional>

#include "desing/baselines.hpp"
#include "desing/calculus.hpp"
#include "desing/retraction.hpp"

namespace desing {

struct RetractionStats {
  Index fallbacks = 0;
  Index failures = 0;
};

template <class Tangent>
struct Evaluation {
  double cost = 0.0;
  Tangent grad;
  std::unique_ptr<LocalModel> model;
};

class DesingGeometry {
 public:
  using Point = ManifoldPoint;
  using Tangent = TangentVector;
  using Eval = Evaluation<Tangent>;

  DesingGeometry(const CostModel& cost, MetricParam metric,
                 RetractionKind kind = RetractionKind::MetricProjection)
      : cost_(cost), metric_(metric), kind_(kind) {}

  Eval evaluate(const Point& x) const {
    auto model = cost_.at(factored(x));
    Tangent g = riemannian_gradient(x, *model, metric_);
    const double value = model->value();
    return {value, std::move(g), std::move(model)};
  }
  double cost(const Point& x) const { return cost_.value(factored(x)); }
  Tangent hess(const Point& x, const Eval& e, const Tangent& v) const {
    return hessian_vec(x, v, *e.model, metric_);
  }
  double inner(const Point& x, const Tangent& a, const Tangent& b) const {
    return desing::inner(x, a, b, metric_);
  }
  std::optional<Point> retract(const Point& x, const Tangent& v, RetractionStats& stats) const {
    RetractionOutcome out = desing::retract(x, v, metric_, kind_, true);
    if (out.fell_back) {
      ++stats.fallbacks;
    }
    return std::move(out.point);
  }
  Index dimension(const Point& x) const { return x.dims().manifold_dim(); }

  const MetricParam& metric() const { return metric_; }
  RetractionKind retraction() const { return kind_; }

 private:
  const CostModel& cost_;
  MetricParam metric_;
  RetractionKind kind_;
};

class LRGeometry {
 public:
  using Point = LRPoint;
  using Tangent = LRTangent;
  using Eval = Evaluation<Tangent>;

  explicit LRGeometry(const CostModel& cost) : cost_(cost) {}

  Eval evaluate(const Point& x) const {
    auto model = cost_.at(x.factored());
    Tangent g = lr_gradient(x, *model);
    const double value = model->value();
    return {value, std::move(g), std::move(model)};
  }
  double cost(const Point& x) const { return cost_.value(x.factored()); }
  Tangent hess(const Point& x, const Eval& e, const Tangent& v) const {
    return lr_hessian_vec(x, v, *e.model);
  }
  double inner(const Point&, const Tangent& a, const Tangent& b) const { return lr_inner(a, b); }
  std::optional<Point> retract(const Point& x, const Tangent& v, RetractionStats&) const {
    return lr_retract(x, v);
  }
  Index dimension(const Point& x) const { return (x.L.rows() + x.R.rows()) * x.L.cols(); }

 private:
  const CostModel& cost_;
};

class FixedRankGeometry {
 public:
  using Point = FixedRankPoint;
  using Tangent = FixedRankTangent;
  using Eval = Evaluation<Tangent>;

  explicit FixedRankGeometry(const CostModel& cost) : cost_(cost) {}

  Eval evaluate(const Point& x) const {
    auto model = cost_.at(x.factored());
    Tangent g = fixedrank_gradient(x, *model);
    const double value = model->value();
    return {value, std::move(g), std::move(model)};
  }
  double cost(const Point& x) const { return cost_.value(x.factored()); }
  Tangent hess(const Point& x, const Eval& e, const Tangent& v) const {
    return fixedrank_hessian_vec(x, v, *e.model);
  }
  double inner(const Point&, const Tangent& a, const Tangent& b) const {
    return fixedrank_inner(a, b);
  }
  /// A step that loses rank is reported as a failed retraction.
  std::optional<Point> retract(const Point& x, const Tangent& v, RetractionStats& stats) const {
    try {
      return fixedrank_retract(x, v);
    } catch (const RankDropped&) {
      ++stats.failures;
      return std::nullopt;
    }
  }
  Index dimension(const Point& x) const {
    const Index r = x.rank();
    return (x.U().rows() + x.V().rows() - r) * r;
  }

 private:
  const CostModel& cost_;
};

}  // namespace desing
