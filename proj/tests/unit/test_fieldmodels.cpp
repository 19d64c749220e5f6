#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "gen.hpp"
#include "vmlab/asymptotics.hpp"
#include "vmlab/error.hpp"
#include "vmlab/fieldmodels.hpp"
#include "vmlab/kinematics.hpp"

using namespace vmlab;
using namespace vmlab::fields;

namespace {
SelfSimilarProfile linear_profile() {
  SelfSimilarProfile p;
  p.kind = ProfileKind::linear;
  p.beta_max = 2.0;
  p.a_radial = 0.3;
  p.e_uniform = Vec3{{0.1, -0.05, 0.02}};
  p.omega = Vec3{{0.0, 0.0, 0.5}};
  return p;
}
}  // namespace

TEST_CASE("zero profile gives a zero field") {
  SelfSimilarProfile p;
  gen::Gen g(401);
  for (int i = 0; i < 100; ++i) {
    const double t = g.uniform(1, 100);
    const EMField em = self_similar_field(p, t, g.ball(t));
    CHECK(em == EMField{});
  }
  CHECK(ZeroField().evaluate(3.0, Vec3{{1, 2, 3}}) == EMField{});
}

TEST_CASE("self-similar field reproduces its profile on rays") {
  gen::Gen g(402);
  for (const SelfSimilarProfile& p : {linear_profile(), coulomb_pair(0.3, 0.6).profile}) {
    SelfSimilarProfile q = p;
    q.omega = Vec3{{0.2, -0.1, 0.4}};
    for (int i = 0; i < 200; ++i) {
      const Vec3 v = g.ball(0.7);
      const double t = g.uniform(1.0, 1e4);
      const EMField em = self_similar_field(q, t, t * kin::hat(v, 1.0));
      const Vec3 e = q.ebb(v);
      CHECK(max_abs(t * t * em.e - e) <= 1e-12 * std::fmax(1.0, max_abs(e)));
      CHECK(max_abs(t * t * em.b - q.bbb(v)) <= 1e-12 * std::fmax(1.0, max_abs(e)));
    }
  }
}

TEST_CASE("exact self-similarity") {
  gen::Gen g(403);
  const SelfSimilarProfile p = coulomb_pair(0.5, 0.6).profile;
  for (int i = 0; i < 500; ++i) {
    const double t = g.uniform(1.0, 50.0);
    const Vec3 x = g.ball(0.9 * t);
    const double lam = g.uniform(1.0, 20.0);
    const EMField a = self_similar_field(p, lam * t, lam * x);
    const EMField b = self_similar_field(p, t, x);
    CHECK(max_abs(lam * lam * a.e - b.e) <= 1e-12 * std::fmax(1e-30, max_abs(b.e)) + 1e-300);
  }
}

TEST_CASE("activation time") {
  const SelfSimilarProfile p = linear_profile();
  CHECK_THROWS_AS(self_similar_field(p, 0.5, Vec3{}), DomainError);
  const SelfSimilarField f(p, 1.0);
  CHECK(f.evaluate(0.5, Vec3{{0.1, 0, 0}}) == EMField{});
  CHECK(f.breakpoints() == std::vector<double>{1.0});
}

TEST_CASE("cutoff keeps the field away from the light cone") {
  const SelfSimilarProfile p = coulomb_pair(1.0, 0.6).profile;
  const double t = 10.0;
  CHECK(self_similar_field(p, t, Vec3{{0.951 * t, 0, 0}}) == EMField{});
  CHECK(self_similar_field(p, t, Vec3{{0.999 * t, 0, 0}}) == EMField{});
  CHECK(norm(self_similar_field(p, t, Vec3{{0.7 * t, 0, 0}}).e) > 0.0);
  const SelfSimilarProfile l = linear_profile();
  CHECK(self_similar_field(l, t, Vec3{{0.9 * t, 0, 0}}) == EMField{});  // beyond β̂_max = 2/√5
}

TEST_CASE("coulomb pair") {
  CHECK_THROWS_AS(coulomb_pair(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(coulomb_pair(1.0, 0.95), DomainError);
  CHECK_THROWS_AS(coulomb_pair(1.0, -0.2), DomainError);

  const CoulombPair zero = coulomb_pair(0.0, 0.5);
  gen::Gen g(404);
  for (int i = 0; i < 50; ++i) {
    const Vec3 v = g.ball(2.0);
    CHECK(zero.charge.value(v) == 0.0);
    CHECK(zero.profile.ebb(v) == Vec3{});
  }

  // Monotone enclosed charge for a nonnegative bump.
  const CoulombPair c = coulomb_pair(2.0, 0.6);
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double m = c.charge.enclosed(0.01 * i);
    CHECK(m >= prev);
    prev = m;
  }
  // Closed-form M(p) against quadrature.
  const auto rule = quad::gauss_legendre(40, 0.0, 0.5);
  double m = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    m += rule.weights[i] * rule.nodes[i] * rule.nodes[i] * c.charge.value(Vec3{{rule.nodes[i], 0, 0}});
  CHECK(c.charge.enclosed(0.5) == doctest::Approx(m).epsilon(1e-13));
}

TEST_CASE("coulomb pair: surface flux equals 4π times the weighted volume integral") {
  const CoulombPair c = coulomb_pair(0.7, 0.6);
  for (double d : {0.1, 0.3, 0.5}) {
    // two independent rules for the two sides
    const double lhs = 4 * std::numbers::pi *
                       quad::ball_integral(
                           [&](const Vec3& x) { return std::pow(kin::bracket(kin::check(x)), 5) * c.charge.value(kin::check(x)); },
                           d, quad::gauss_legendre(60), quad::product_sphere(8, 16));
    const double rhs = quad::sphere_integral(
        [&](const Vec3& w) { return dot(c.profile.ebb_at_speed(w), w / norm(w)); }, d, quad::product_sphere(20, 40));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
  }
}

TEST_CASE("implied charge recovers the coulomb bump") {
  const CoulombPair c = coulomb_pair(0.4, 0.6);
  gen::Gen g(405);
  for (int i = 0; i < 100; ++i) {
    const Vec3 v = g.ball(0.7);
    CHECK(implied_charge(c.profile, v) == doctest::Approx(c.charge.value(v)).epsilon(1e-6).scale(0.4));
  }
}

TEST_CASE("decay bound holds empirically") {
  for (const SelfSimilarProfile& p : {linear_profile(), coulomb_pair(0.5, 0.6).profile}) {
    const SelfSimilarField f(p, 1.0);
    const double emp = empirical_decay_constant(f, 1.0, 1e4);
    REQUIRE(f.decay_bound().has_value());
    CHECK(std::isfinite(emp));
    CHECK(emp > 0.0);
    CHECK(emp <= *f.decay_bound());
  }
  CHECK(empirical_decay_constant(ZeroField(), 1.0, 100.0) == 0.0);
}

TEST_CASE("rotated field") {
  gen::Gen g(406);
  const auto base = std::make_shared<SelfSimilarField>(linear_profile(), 1.0);
  const Mat3 r = g.rotation();
  const RotatedField rf(base, r);
  for (int i = 0; i < 100; ++i) {
    const double t = g.uniform(1, 10);
    const Vec3 x = g.ball(t);
    const EMField a = rf.evaluate(t, x);
    const EMField b = base->evaluate(t, r * x);
    CHECK(max_abs(r * a.e - b.e) <= 1e-15 * 10);
    CHECK(max_abs(r * a.b - b.b) <= 1e-15 * 10);
  }
  Mat3 bad = identity3();
  bad[0][0] = 2.0;
  CHECK_THROWS_AS(RotatedField(base, bad), ValidationError);
}

TEST_CASE("L·v̂ = E·v̂") {
  gen::Gen g(407);
  const SelfSimilarProfile p = linear_profile();
  for (int i = 0; i < 500; ++i) {
    const Vec3 v = g.ball(2.0);
    const Vec3 h = kin::hat(v, 1.0);
    CHECK(dot(p.lbb(v), h) == doctest::Approx(dot(p.ebb(v), h)).epsilon(1e-12).scale(1.0));
  }
}
