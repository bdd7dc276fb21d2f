#include "treepark/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace treepark {

double Pmf::in_range_mass() const {
  return std::accumulate(probs.begin(), probs.end(), 0.0);
}

double Pmf::mean_lower() const {
  double m = 0.0;
  for (std::size_t k = 1; k < probs.size(); ++k) m += static_cast<double>(k) * probs[k];
  m += tail_mass * static_cast<double>(probs.size());  // tail values are > K
  return m;
}

std::optional<double> Pmf::mean_upper() const {
  // Tail mass at the arithmetic noise floor is indistinguishable from zero;
  // genuine tail mass makes the mean unbounded from above.
  if (tail_mass > 1e-12) return std::nullopt;
  return mean_lower() + tail_mass * static_cast<double>(probs.size());
}

double Pmf::variance_in_range() const {
  double m = 0.0, m2 = 0.0;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    double kk = static_cast<double>(k);
    m += kk * probs[k];
    m2 += kk * kk * probs[k];
  }
  return m2 - m * m;
}

void Pmf::validate(double tol) const {
  for (double p : probs) {
    if (p < 0.0) throw validation_error("Pmf: negative entry");
  }
  if (tail_mass < 0.0) throw validation_error("Pmf: negative tail mass");
  if (std::abs(total_mass() - 1.0) > tol) {
    throw validation_error("Pmf: mass " + std::to_string(total_mass()) + " not 1 within tolerance");
  }
}

void Pmf::normalize() {
  double total = total_mass();
  if (total <= 0.0) throw validation_error("Pmf: cannot normalize zero mass");
  for (double& p : probs) p /= total;
  tail_mass /= total;
}

double Pmf::tv_distance(const Pmf& other) const {
  double d = 0.0;
  std::size_t n = std::max(probs.size(), other.probs.size());
  for (std::size_t k = 0; k < n; ++k) {
    double a = k < probs.size() ? probs[k] : 0.0;
    double b = k < other.probs.size() ? other.probs[k] : 0.0;
    d += std::abs(a - b);
  }
  d += std::abs(tail_mass - other.tail_mass);
  return d / 2.0;
}

double Pmf::cdf(int k) const {
  double c = 0.0;
  int top = std::min(k, max_value());
  for (int j = 0; j <= top; ++j) c += probs[static_cast<std::size_t>(j)];
  return c;
}

Pmf Pmf::delta(int value, int K) {
  if (K < 0 || value < 0) throw validation_error("Pmf::delta: bad arguments");
  Pmf out(K);
  if (value <= K) {
    out.probs[static_cast<std::size_t>(value)] = 1.0;
  } else {
    out.tail_mass = 1.0;
  }
  return out;
}

Pmf Pmf::poisson(double mu, int K) {
  if (mu < 0.0) throw validation_error("Pmf::poisson: mean must be nonnegative");
  if (K < 0) throw validation_error("Pmf::poisson: K must be nonnegative");
  Pmf out(K);
  double term = std::exp(-mu);
  double cum = 0.0;
  for (int k = 0; k <= K; ++k) {
    out.probs[static_cast<std::size_t>(k)] = term;
    cum += term;
    term *= mu / (k + 1);
  }
  out.tail_mass = std::max(0.0, 1.0 - cum);
  return out;
}

Pmf Pmf::two_point(double alpha, int K) {
  if (alpha <= 0.0 || alpha >= 2.0) throw validation_error("Pmf::two_point: alpha must be in (0,2)");
  if (K < 2) throw validation_error("Pmf::two_point: K must be >= 2");
  Pmf out(K);
  out.probs[0] = 1.0 - alpha / 2.0;
  out.probs[2] = alpha / 2.0;
  return out;
}

}  // namespace treepark
