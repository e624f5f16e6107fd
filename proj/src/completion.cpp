#include "desing/completion.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_map>

#include "desing/linalg.hpp"

namespace desing {

static_assert(std::endian::native == std::endian::little,
              "problem files are little-endian; big-endian hosts are unsupported");

// ---------------------------------------------------------------------------
// SvSpec

SvSpec SvSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw InvalidArgument("singular value spec must look like 'uniform:lo,hi' or 'expdecay:rho'");
  }
  const std::string kind = text.substr(0, colon);
  const std::string args = text.substr(colon + 1);
  try {
    if (kind == "uniform") {
      const auto comma = args.find(',');
      if (comma == std::string::npos) {
        throw InvalidArgument("uniform spec needs 'lo,hi'");
      }
      const double lo = std::stod(args.substr(0, comma));
      const double hi = std::stod(args.substr(comma + 1));
      if (!(lo >= 0.0) || !(hi >= lo)) {
        throw InvalidArgument("uniform spec needs 0 <= lo <= hi");
      }
      return uniform(lo, hi);
    }
    if (kind == "expdecay") {
      const double rho = std::stod(args);
      if (!(rho > 0.0) || !(rho <= 1.0)) {
        throw InvalidArgument("expdecay rate must lie in (0, 1]");
      }
      return exp_decay(rho);
    }
  } catch (const std::logic_error&) {
    throw InvalidArgument("cannot parse singular value spec '" + text + "'");
  }
  throw InvalidArgument("unknown singular value spec kind '" + kind + "'");
}

std::string SvSpec::to_string() const {
  // Shortest representation that parses back to the same double.
  auto num = [](double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
  };
  if (kind == Kind::Uniform) {
    return "uniform:" + num(a) + "," + num(b);
  }
  return "expdecay:" + num(a);
}

// ---------------------------------------------------------------------------
// Generator

Index target_nnz(Index m, Index n, Index r, double oversampling) {
  return static_cast<Index>(
      std::llround(oversampling * static_cast<double>((m + n - r) * r)));
}

CompletionProblem generate_problem(const GeneratorParams& params) {
  const Index m = params.m;
  const Index n = params.n;
  if (m <= 0 || n <= 0 || params.r_star < 1 || params.r_star > std::min(m, n) ||
      params.r < 1 || params.r >= std::min(m, n)) {
    throw InvalidArgument("invalid generator dimensions");
  }
  if (!(params.oversampling > 0.0)) {
    throw InvalidArgument("oversampling must be positive");
  }
  const Index nnz = target_nnz(m, n, params.r, params.oversampling);
  const std::uint64_t total = static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(n);
  if (nnz < 0 || static_cast<std::uint64_t>(nnz) > total) {
    std::ostringstream os;
    os << "requested " << nnz << " observed entries but the matrix has only " << total;
    throw OversampleTooLarge(os.str());
  }

  std::mt19937_64 rng(params.seed);
  const Matrix UA = linalg::random_stiefel(m, params.r_star, rng);
  const Matrix VA = linalg::random_stiefel(n, params.r_star, rng);
  Vector sA(params.r_star);
  if (params.sv.kind == SvSpec::Kind::Uniform) {
    std::uniform_real_distribution<double> unif(params.sv.a, params.sv.b);
    for (Index i = 0; i < params.r_star; ++i) {
      sA(i) = unif(rng);
    }
    std::sort(sA.data(), sA.data() + sA.size(), std::greater<>());
  } else {
    for (Index i = 0; i < params.r_star; ++i) {
      sA(i) = std::pow(params.sv.a, static_cast<double>(i));
    }
  }

  // Partial Fisher-Yates over the m n linear indices; only displaced slots
  // are stored, so memory is O(nnz).
  std::unordered_map<std::uint64_t, std::uint64_t> displaced;
  displaced.reserve(static_cast<std::size_t>(2 * nnz));
  auto slot = [&](std::uint64_t k) {
    auto it = displaced.find(k);
    return it == displaced.end() ? k : it->second;
  };
  std::vector<std::int64_t> rows(static_cast<std::size_t>(nnz));
  std::vector<std::int64_t> cols(static_cast<std::size_t>(nnz));
  for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(nnz); ++k) {
    std::uniform_int_distribution<std::uint64_t> pick(k, total - 1);
    const std::uint64_t j = pick(rng);
    const std::uint64_t chosen = slot(j);
    displaced[j] = slot(k);
    displaced[k] = chosen;
    rows[k] = static_cast<std::int64_t>(chosen / static_cast<std::uint64_t>(n));
    cols[k] = static_cast<std::int64_t>(chosen % static_cast<std::uint64_t>(n));
  }

  CompletionProblem problem;
  problem.params = params;
  problem.mask = SparseMask(m, n, std::move(rows), std::move(cols));
  FactoredMatrix truth{UA * sA.asDiagonal(), VA};
  problem.observed = kernels::serial::masked_entries(problem.mask, RowMatrix(truth.left),
                                                     RowMatrix(truth.right));
  problem.truth = std::move(truth);
  return problem;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[8] = {'D', 'S', 'N', 'G', 'M', 'C', 'P', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) {
    throw FormatError("truncated problem file");
  }
  return v;
}

}  // namespace

void save_problem(const CompletionProblem& problem, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw Error("cannot open '" + path.string() + "' for writing");
  }
  const GeneratorParams& p = problem.params;
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(p.m));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(p.n));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(p.r_star));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(p.r));
  put<std::uint64_t>(os, p.seed);
  put<double>(os, p.oversampling);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(p.sv.kind));
  put<double>(os, p.sv.a);
  put<double>(os, p.sv.b);
  const auto ri = problem.mask.row_indices();
  const auto ci = problem.mask.col_indices();
  put<std::uint64_t>(os, static_cast<std::uint64_t>(problem.mask.nnz()));
  for (std::size_t e = 0; e < ri.size(); ++e) {
    put<std::uint64_t>(os, static_cast<std::uint64_t>(ri[e]));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(ci[e]));
  }
  for (Index e = 0; e < problem.observed.size(); ++e) {
    put<double>(os, problem.observed(e));
  }
  if (!os) {
    throw Error("failed writing '" + path.string() + "'");
  }
}

CompletionProblem load_problem(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw Error("cannot open '" + path.string() + "'");
  }
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a problem file (bad magic)");
  }
  if (get<std::uint32_t>(is) != kVersion) {
    throw FormatError("unsupported problem file version");
  }
  CompletionProblem problem;
  GeneratorParams& p = problem.params;
  p.m = static_cast<Index>(get<std::uint64_t>(is));
  p.n = static_cast<Index>(get<std::uint64_t>(is));
  p.r_star = static_cast<Index>(get<std::uint64_t>(is));
  p.r = static_cast<Index>(get<std::uint64_t>(is));
  p.seed = get<std::uint64_t>(is);
  p.oversampling = get<double>(is);
  const auto kind = get<std::uint32_t>(is);
  if (kind > 1) {
    throw FormatError("unknown singular value spec kind");
  }
  p.sv.kind = static_cast<SvSpec::Kind>(kind);
  p.sv.a = get<double>(is);
  p.sv.b = get<double>(is);
  const auto nnz = get<std::uint64_t>(is);
  if (p.m < 0 || p.n < 0 || (p.n > 0 && static_cast<std::uint64_t>(p.m) >
                                              std::numeric_limits<std::uint64_t>::max() /
                                                  static_cast<std::uint64_t>(p.n))) {
    throw FormatError("matrix dimensions out of range");
  }
  if (nnz > static_cast<std::uint64_t>(p.m) * static_cast<std::uint64_t>(p.n)) {
    throw FormatError("observed count exceeds matrix size");
  }
  // Each entry takes 24 bytes; check before allocating.
  const auto here = static_cast<std::uint64_t>(is.tellg());
  const std::uint64_t size = std::filesystem::file_size(path);
  if (size < here || (size - here) / 24 < nnz) {
    throw FormatError("truncated problem file");
  }
  std::vector<std::int64_t> rows(nnz);
  std::vector<std::int64_t> cols(nnz);
  for (std::uint64_t e = 0; e < nnz; ++e) {
    rows[e] = static_cast<std::int64_t>(get<std::uint64_t>(is));
    cols[e] = static_cast<std::int64_t>(get<std::uint64_t>(is));
  }
  problem.observed.resize(static_cast<Index>(nnz));
  for (std::uint64_t e = 0; e < nnz; ++e) {
    problem.observed(static_cast<Index>(e)) = get<double>(is);
  }
  for (std::uint64_t e = 1; e < nnz; ++e) {
    const bool ordered = rows[e - 1] < rows[e] ||
                         (rows[e - 1] == rows[e] && cols[e - 1] < cols[e]);
    if (!ordered) {
      throw FormatError("mask entries are not sorted row-major");
    }
  }
  try {
    problem.mask = SparseMask(p.m, p.n, std::move(rows), std::move(cols));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
  is.peek();
  if (!is.eof()) {
    throw FormatError("trailing bytes after problem data");
  }
  return problem;
}

// ---------------------------------------------------------------------------
// Completion cost

namespace {

class CompletionLocal final : public LocalModel {
 public:
  CompletionLocal(const CompletionProblem& problem, KernelMode mode, const FactoredMatrix& x)
      : mask_(problem.mask), mode_(mode) {
    residual_ = entries(RowMatrix(x.left), RowMatrix(x.right));
    residual_ -= problem.observed;
    value_ = mode_ == KernelMode::Parallel ? kernels::parallel::half_sum_squares(residual_)
                                           : kernels::serial::half_sum_squares(residual_);
  }

  double value() const override { return value_; }

  Matrix grad_right(const Matrix& a) const override { return times(residual_, a); }
  Matrix grad_left(const Matrix& b) const override { return t_times(residual_, b); }

  Matrix hess_right(const FactoredDirection& d, const Matrix& a) const override {
    return times(direction_entries(d), a);
  }
  Matrix hess_left(const FactoredDirection& d, const Matrix& b) const override {
    return t_times(direction_entries(d), b);
  }
  std::pair<Matrix, Matrix> hess_products(const FactoredDirection& d, const Matrix& a,
                                          const Matrix& b) const override {
    const Vector dv = direction_entries(d);
    return {times(dv, a), t_times(dv, b)};
  }

  double hessian_op_norm() const override { return mask_.nnz() > 0 ? 1.0 : 0.0; }

  std::optional<Matrix> dense_gradient() const override {
    if (mask_.rows() * mask_.cols() > kDenseLimit) {
      return std::nullopt;
    }
    Matrix g = Matrix::Zero(mask_.rows(), mask_.cols());
    const auto ri = mask_.row_indices();
    const auto ci = mask_.col_indices();
    for (Index e = 0; e < mask_.nnz(); ++e) {
      g(ri[static_cast<std::size_t>(e)], ci[static_cast<std::size_t>(e)]) = residual_(e);
    }
    return g;
  }

 private:
  static constexpr Index kDenseLimit = 1 << 20;

  Vector entries(const RowMatrix& left, const RowMatrix& right) const {
    return mode_ == KernelMode::Parallel
               ? kernels::parallel::masked_entries(mask_, left, right)
               : kernels::serial::masked_entries(mask_, left, right);
  }
  Vector direction_entries(const FactoredDirection& d) const {
    Vector v = entries(RowMatrix(d.a1), RowMatrix(d.b1));
    v += entries(RowMatrix(d.a2), RowMatrix(d.b2));
    return v;
  }
  Matrix times(const Vector& vals, const Matrix& a) const {
    return mode_ == KernelMode::Parallel
               ? kernels::parallel::sparse_times(mask_, vals, RowMatrix(a))
               : kernels::serial::sparse_times(mask_, vals, RowMatrix(a));
  }
  Matrix t_times(const Vector& vals, const Matrix& b) const {
    return mode_ == KernelMode::Parallel
               ? kernels::parallel::sparse_t_times(mask_, vals, RowMatrix(b))
               : kernels::serial::sparse_t_times(mask_, vals, RowMatrix(b));
  }

  const SparseMask& mask_;
  KernelMode mode_;
  Vector residual_;
  double value_ = 0.0;
};

}  // namespace

CompletionCost::CompletionCost(const CompletionProblem& problem, KernelMode mode)
    : problem_(problem), mode_(mode) {
  if (problem.observed.size() != problem.mask.nnz()) {
    throw InvalidArgument("observed values and mask differ in length");
  }
}

double CompletionCost::value(const FactoredMatrix& x) const {
  return CompletionLocal(problem_, mode_, x).value();
}

std::unique_ptr<LocalModel> CompletionCost::at(const FactoredMatrix& x) const {
  return std::make_unique<CompletionLocal>(problem_, mode_, x);
}

// ---------------------------------------------------------------------------
// Dense quadratic cost

namespace {

class QuadraticLocal final : public LocalModel {
 public:
  QuadraticLocal(const QuadraticCost& cost, const FactoredMatrix& x) : cost_(cost) {
    grad_ = cost.weights().cwiseProduct(x.dense() - cost.target());
    value_ = 0.5 * (x.dense() - cost.target()).cwiseProduct(grad_).sum();
  }

  double value() const override { return value_; }
  Matrix grad_right(const Matrix& a) const override { return grad_ * a; }
  Matrix grad_left(const Matrix& b) const override { return grad_.transpose() * b; }
  Matrix hess_right(const FactoredDirection& d, const Matrix& a) const override {
    return cost_.weights().cwiseProduct(d.dense()) * a;
  }
  Matrix hess_left(const FactoredDirection& d, const Matrix& b) const override {
    return cost_.weights().cwiseProduct(d.dense()).transpose() * b;
  }
  std::pair<Matrix, Matrix> hess_products(const FactoredDirection& d, const Matrix& a,
                                          const Matrix& b) const override {
    const Matrix h = cost_.weights().cwiseProduct(d.dense());
    return {h * a, h.transpose() * b};
  }
  double hessian_op_norm() const override { return cost_.weights().maxCoeff(); }
  std::optional<Matrix> dense_gradient() const override { return grad_; }

 private:
  const QuadraticCost& cost_;
  Matrix grad_;
  double value_ = 0.0;
};

}  // namespace

QuadraticCost::QuadraticCost(Matrix target)
    : QuadraticCost(target, Matrix::Ones(target.rows(), target.cols())) {}

QuadraticCost::QuadraticCost(Matrix target, Matrix weights)
    : target_(std::move(target)), weights_(std::move(weights)) {
  if (weights_.rows() != target_.rows() || weights_.cols() != target_.cols()) {
    throw InvalidArgument("weights and target differ in shape");
  }
  if (!(weights_.array() > 0.0).all()) {
    throw InvalidArgument("weights must be positive");
  }
}

double QuadraticCost::value(const FactoredMatrix& x) const {
  const Matrix d = x.dense() - target_;
  return 0.5 * d.cwiseProduct(weights_).cwiseProduct(d).sum();
}

std::unique_ptr<LocalModel> QuadraticCost::at(const FactoredMatrix& x) const {
  return std::make_unique<QuadraticLocal>(*this, x);
}

}  // namespace desing
