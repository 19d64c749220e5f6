#include "vmlab/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "vmlab/error.hpp"

namespace vmlab::quad {

Rule1D gauss_legendre(int n) {
  if (n < 1) throw DomainError("quadrature", "gauss_legendre", "need at least one node");
  Rule1D rule;
  if (n == 1) return Rule1D{{0.0}, {2.0}};
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

Rule1D gauss_legendre(int n, double a, double b) {
  Rule1D r = gauss_legendre(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = mid + half * r.nodes[i];
    r.weights[i] *= half;
  }
  return r;
}

SphereRule product_sphere(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw DomainError("quadrature", "product_sphere", "empty rule");
  const Rule1D mu = gauss_legendre(n_theta);
  SphereRule rule;
  rule.nodes.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  rule.weights.reserve(rule.nodes.capacity());
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    const double c = mu.nodes[i];
    const double s = std::sqrt(std::fmax(0.0, 1.0 - c * c));
    for (int j = 0; j < n_phi; ++j) {
      const double ph = (j + 0.5) * dphi;
      rule.nodes.push_back(Vec3{{s * std::cos(ph), s * std::sin(ph), c}});
      rule.weights.push_back(mu.weights[i] * dphi);
    }
  }
  return rule;
}

double sphere_integral(const std::function<double(const Vec3&)>& g, double r, const SphereRule& rule) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * g(r * rule.nodes[i]);
  return r * r * sum;
}

double ball_integral(const std::function<double(const Vec3&)>& g, double r, const Rule1D& radial_unit,
                     const SphereRule& rule) {
  double sum = 0.0;
  for (std::size_t k = 0; k < radial_unit.nodes.size(); ++k) {
    // radial_unit lives on [-1, 1]; map to [0, r].
    const double rho = 0.5 * r * (radial_unit.nodes[k] + 1.0);
    const double wr = 0.5 * r * radial_unit.weights[k];
    double shell = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) shell += rule.weights[i] * g(rho * rule.nodes[i]);
    sum += wr * rho * rho * shell;
  }
  return sum;
}

}  // namespace vmlab::quad
