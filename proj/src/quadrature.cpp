#include "feec/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace feec {

namespace {

// Appends the three (or one, if a == b == c) permutations of a symmetric
// barycentric orbit (a, b, b) with weight w.
void orbit3(std::vector<TriQuadPoint>& pts, double a, double b, double w) {
  // barycentric (l0, l1, l2) -> reference (x, y) = (l1, l2)
  pts.push_back({b, b, w});
  pts.push_back({a, b, w});
  pts.push_back({b, a, w});
}

void orbit6(std::vector<TriQuadPoint>& pts, double a, double b, double w) {
  const double c = 1.0 - a - b;
  pts.push_back({b, c, w});
  pts.push_back({c, a, w});
  pts.push_back({a, b, w});
  pts.push_back({c, b, w});
  pts.push_back({a, c, w});
  pts.push_back({b, a, w});
}

std::vector<TriQuadPoint> make_triangle_rule(int degree) {
  std::vector<TriQuadPoint> pts;
  if (degree <= 1) {
    pts.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0});
  } else if (degree <= 2) {
    // edge-midpoint rule
    pts.push_back({0.5, 0.0, 1.0 / 3.0});
    pts.push_back({0.5, 0.5, 1.0 / 3.0});
    pts.push_back({0.0, 0.5, 1.0 / 3.0});
  } else if (degree <= 4) {
    // Dunavant degree-4, 6 points
    orbit3(pts, 0.108103018168070, 0.445948490915965, 0.223381589678011);
    orbit3(pts, 0.816847572980459, 0.091576213509771, 0.109951743655322);
  } else if (degree <= 6) {
    // Dunavant degree-6, 12 points
    orbit3(pts, 0.501426509658179, 0.249286745170910, 0.116786275726379);
    orbit3(pts, 0.873821971016996, 0.063089014491502, 0.050844906370207);
    orbit6(pts, 0.310352451033785, 0.053145049844816, 0.082851075618374);
  } else {
    throw std::invalid_argument("triangle_rule: unsupported degree");
  }
  return pts;
}

// Legendre polynomial P_n and derivative at x, by recurrence.
void legendre(int n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    p = p0;
    dp = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

LineRule make_gauss_rule(int n) {
  LineRule rule;
  rule.xi.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev initial guess, refined by Newton on P_n.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p, dp;
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, p, dp);
      const double dx = -p / dp;
      x += dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(n, x, p, dp);
    // map from [-1, 1] to [0, 1]
    rule.xi[i] = 0.5 * (1.0 - x);
    rule.w[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

const std::vector<TriQuadPoint>& triangle_rule(int degree) {
  static std::map<int, std::vector<TriQuadPoint>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  const int key = degree <= 1 ? 1 : degree <= 2 ? 2 : degree <= 4 ? 4 : 6;
  if (degree > 6) throw std::invalid_argument("triangle_rule: unsupported degree");
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, make_triangle_rule(key)).first;
  return it->second;
}

const LineRule& gauss_rule(int n) {
  static std::map<int, LineRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_rule(n)).first;
  return it->second;
}

}  // namespace feec
