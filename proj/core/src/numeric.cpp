#include "ppgbench/numeric.hpp"

namespace ppgbench {

std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n)
    raise(ErrorCode::ShapeMismatch, "solve_linear: square system required");

  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
  const double tol = std::max(scale, 1.0) * 1e-9;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) <= tol)
      raise(ErrorCode::SingularSystem, "pivot collapsed at column " + std::to_string(col));
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(pivot, c), a(col, c));
      std::swap(b[pivot], b[col]);
    }
    const double inv = 1.0 / a(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a(r, col) * inv;
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= factor * a(col, c);
      b[r] -= factor * b[col];
    }
  }

  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a(i, c) * x[c];
    x[i] = acc / a(i, i);
  }
  return x;
}

double vec_mean(const std::vector<double>& v) {
  if (v.empty()) raise(ErrorCode::Empty, "mean of empty vector");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double vec_median(std::vector<double> v) {
  if (v.empty()) raise(ErrorCode::Empty, "median of empty vector");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double vec_stddev_population(const std::vector<double>& v) {
  const double mu = vec_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

namespace {
double percentile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.size() == 1) return sorted[0];
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t k = static_cast<std::size_t>(pos);
  if (k + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(k);
  return sorted[k] + frac * (sorted[k + 1] - sorted[k]);
}
}  // namespace

double vec_iqr(std::vector<double> v) {
  if (v.empty()) raise(ErrorCode::Empty, "iqr of empty vector");
  std::sort(v.begin(), v.end());
  return percentile_sorted(v, 0.75) - percentile_sorted(v, 0.25);
}

}  // namespace ppgbench
