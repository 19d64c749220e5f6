#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gen.hpp"
#include "vmlab/error.hpp"
#include "vmlab/lorentz.hpp"

using namespace vmlab;
using namespace vmlab::lorentz;

namespace {
double diff4(const FourVector& a, const FourVector& b) {
  return std::fmax(std::fabs(a.t - b.t), max_abs(a.x - b.x));
}
}  // namespace

TEST_CASE("boost_x examples") {
  CHECK(max_abs_diff(boost_x(0.0).matrix(), identity4()) == 0.0);
  for (double phi : {0.5, -0.5, 2.0, -2.0})
    CHECK(max_abs_diff((boost_x(phi) * boost_x(-phi)).matrix(), identity4()) <= 1e-12);
  const FourVector y = boost_x(1.0)(FourVector{1.0, Vec3{}});
  CHECK(y.t == doctest::Approx(std::cosh(1.0)).epsilon(1e-15));
  CHECK(y.x[0] == doctest::Approx(std::sinh(1.0)).epsilon(1e-15));
  CHECK(y.x[1] == 0.0);
  CHECK(max_abs_diff(boost_x(0.7).inverse().matrix(), boost_x(-0.7).matrix()) <= 1e-15);
  CHECK_THROWS_AS(boost_x(701.0), DomainError);
  CHECK(boost_x(0.3).kind() == TransformKind::boost_x);
}

TEST_CASE("embed_rotation examples") {
  CHECK(max_abs_diff(embed_rotation(identity3()).matrix(), identity4()) == 0.0);
  const auto r = embed_rotation(axis_angle(Vec3{{0, 0, 1}}, std::numbers::pi / 2));
  const FourVector y = r(FourVector{1.0, Vec3{{1, 0, 0}}});
  CHECK(diff4(y, FourVector{1.0, Vec3{{0, 1, 0}}}) <= 1e-15);
  Mat3 bad = identity3();
  bad[0][1] = 0.1;
  CHECK_THROWS_AS(embed_rotation(bad), ValidationError);
  Mat3 improper = identity3();
  improper[2][2] = -1.0;
  CHECK_THROWS_AS(embed_rotation(improper), ValidationError);

  gen::Gen g(201);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto rr = embed_rotation(g.rotation());
    const FourVector x = g.four(10.0);
    const FourVector y2 = rr(x);
    worst = std::fmax(worst, std::fabs(norm(y2.x) - norm(x.x)));
    CHECK(y2.t == x.t);
  }
  CHECK(worst <= 1e-13 * 10.0);
}

TEST_CASE("from_matrix validation") {
  CHECK_NOTHROW(LorentzTransform::from_matrix(boost_x(0.4).matrix()));
  Mat4 m = identity4();
  m[0][0] = -1.0;
  m[1][1] = -1.0;
  CHECK_THROWS_AS(LorentzTransform::from_matrix(m), ValidationError);  // not orthochronous
  Mat4 p = identity4();
  p[1][1] = -1.0;
  CHECK_THROWS_AS(LorentzTransform::from_matrix(p), ValidationError);  // parity
  Mat4 s = identity4();
  s[0][1] = 0.1;
  CHECK_THROWS_AS(LorentzTransform::from_matrix(s), ValidationError);
}

TEST_CASE("metric invariance on random products") {
  gen::Gen g(202);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = g.lorentz(1 + static_cast<int>(g.unit() * 10));
    const FourVector x = g.four(5.0);
    const FourVector y = apply(a, x);
    const double scale = std::fmax(1.0, std::fabs(eta(y, y)) + y.t * y.t);
    worst = std::fmax(worst, std::fabs(eta(y, y) - eta(x, x)) / scale);
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("boost preserves the t-x1 hyperbola") {
  gen::Gen g(203);
  for (int i = 0; i < 1000; ++i) {
    const double phi = g.uniform(-3, 3);
    const FourVector x = g.four(5.0);
    const FourVector y = boost_x(phi)(x);
    const double lhs = y.x[0] * y.x[0] - y.t * y.t;
    const double rhs = x.x[0] * x.x[0] - x.t * x.t;
    CHECK(std::fabs(lhs - rhs) <= 1e-10 * std::fmax(1.0, y.t * y.t));
    CHECK(y.x[1] == x.x[1]);
  }
}

TEST_CASE("group closure for long products") {
  gen::Gen g(204);
  for (int i = 0; i < 200; ++i) {
    const auto a = g.lorentz(50);
    CHECK_NOTHROW(LorentzTransform::from_matrix(a.matrix()));
    CHECK(a.metric_defect() <= 1e-10);
  }
}

TEST_CASE("decompose examples") {
  const auto d0 = decompose(LorentzTransform());
  CHECK(d0.phi == 0.0);
  CHECK(max_abs_diff(d0.reconstruct().matrix(), identity4()) <= 1e-15);

  const auto d1 = decompose(boost_x(1.3));
  CHECK(d1.phi == doctest::Approx(1.3).epsilon(1e-13));
  CHECK(max_abs_diff(d1.reconstruct().matrix(), boost_x(1.3).matrix()) <= 1e-10);

  // negative rapidity: φ ≥ 0 with the sign absorbed into the rotations
  const auto d2 = decompose(boost_x(-0.8));
  CHECK(d2.phi == doctest::Approx(0.8).epsilon(1e-13));
  CHECK(max_abs_diff(d2.reconstruct().matrix(), boost_x(-0.8).matrix()) <= 1e-10);

  gen::Gen g(205);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto a = g.lorentz(20);
    const auto d = decompose(a);
    CHECK(d.phi >= 0.0);
    CHECK(d.r1.kind() == TransformKind::rotation);
    CHECK(d.r2.kind() == TransformKind::rotation);
    CHECK(d.phi == doctest::Approx(std::acosh(a.matrix()[0][0])).epsilon(1e-8));
    worst = std::fmax(worst, max_abs_diff(d.reconstruct().matrix(), a.matrix()));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("boost_to_rest examples") {
  CHECK(max_abs_diff(boost_to_rest(FourVector{1.0, Vec3{}}).matrix(), identity4()) == 0.0);
  const double v = 0.75;
  const auto a = boost_to_rest(FourVector{std::sqrt(1 + v * v), Vec3{{v, 0, 0}}});
  CHECK(max_abs_diff(a.matrix(), boost_x(std::asinh(v)).matrix()) <= 1e-14);

  const FourVector p{3.0, Vec3{{1, 2, 0}}};
  const FourVector y = boost_to_rest(p)(FourVector{2.0, Vec3{}});
  CHECK(diff4(y, p) <= 1e-10);

  CHECK_THROWS_AS(boost_to_rest(FourVector{1.0, Vec3{{2, 0, 0}}}), DomainError);
  CHECK_THROWS_AS(boost_to_rest(FourVector{-2.0, Vec3{{1, 0, 0}}}), DomainError);
  CHECK_THROWS_AS(boost_to_rest(FourVector{1.0, Vec3{{1, 0, 0}}}), DomainError);

  gen::Gen g(206);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 x = g.ball(20.0);
    const FourVector q{std::sqrt(1.0 + norm2(x)), x};
    CHECK(diff4(boost_to_rest(q)(FourVector{1.0, Vec3{}}), q) <= 1e-10 * q.t);
  }
}

TEST_CASE("onset time") {
  CHECK(onset_time(embed_rotation(axis_angle(Vec3{{1, 1, 0}}, 0.3)), 2.0) == 0.0);
  CHECK(onset_time(boost_x(-0.6), 2.0) == doctest::Approx(std::sinh(0.6) * 2.0).epsilon(1e-15));
  const auto a = embed_rotation(axis_angle(Vec3{{0, 1, 0}}, 1.0)) * boost_x(0.6) *
                 embed_rotation(axis_angle(Vec3{{1, 0, 1}}, -0.4));
  CHECK(onset_time(a, 2.0) == doctest::Approx(std::sinh(0.6) * 2.0).epsilon(1e-12));
}

TEST_CASE("rotation helpers") {
  gen::Gen g(207);
  for (int i = 0; i < 200; ++i) {
    const Vec3 n = g.direction();
    const Mat3 r = rotation_e1_to(n);
    CHECK(max_abs(r * Vec3{{1, 0, 0}} - n) <= 1e-14);
    CHECK(det3(r) == doctest::Approx(1.0).epsilon(1e-14));
  }
  const Mat3 flip = rotation_e1_to(Vec3{{-1, 0, 0}});
  CHECK(max_abs(flip * Vec3{{1, 0, 0}} - Vec3{{-1, 0, 0}}) <= 1e-15);
}
