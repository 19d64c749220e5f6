#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "vmlab/error.hpp"
#include "vmlab/faraday.hpp"

using namespace vmlab;
using namespace vmlab::faraday;

namespace {
double field_diff(const EMField& a, const EMField& b) { return std::fmax(max_abs(a.e - b.e), max_abs(a.b - b.b)); }

Mat4 antisym(const Mat4& m) {
  Mat4 r{};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) r[i][j] = m[i][j] + m[j][i];
  return r;
}
}  // namespace

TEST_CASE("tensor layout") {
  CHECK(max_abs(to_tensor(EMField{}).matrix()) == 0.0);
  const Mat4 f = to_tensor(EMField{Vec3{{1, 0, 0}}, Vec3{}}).matrix();
  CHECK(f[0][1] == 1.0);
  CHECK(f[1][0] == -1.0);
  double rest = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (!((i == 0 && j == 1) || (i == 1 && j == 0))) rest = std::fmax(rest, std::fabs(f[i][j]));
  CHECK(rest == 0.0);

  Mat4 b1{};
  b1[2][3] = 1.0;
  b1[3][2] = -1.0;
  const EMField em = from_tensor(b1);
  CHECK(em.b == Vec3{{1, 0, 0}});
  CHECK(em.e == Vec3{});

  const Mat4 full = to_tensor(EMField{Vec3{{1, 2, 3}}, Vec3{{4, 5, 6}}}).matrix();
  CHECK(full[0][2] == 2.0);
  CHECK(full[1][2] == 6.0);
  CHECK(full[1][3] == -5.0);
  CHECK(full[2][3] == 4.0);
}

TEST_CASE("round trips are exact") {
  gen::Gen g(301);
  for (int i = 0; i < 1000; ++i) {
    const EMField em = g.field(10.0);
    CHECK(from_tensor(to_tensor(em)) == em);
    CHECK(from_tensor(to_tensor(em).matrix()) == em);
  }
}

TEST_CASE("non-antisymmetric input is rejected") {
  Mat4 m{};
  m[0][1] = 1.0;
  CHECK_THROWS_AS(from_tensor(m), ValidationError);
  CHECK_THROWS_AS(FaradayTensor::from_matrix(m), ValidationError);
  m[1][1] = 0.5;
  m[1][0] = -1.0;
  CHECK_THROWS_AS(from_tensor(m), ValidationError);
}

TEST_CASE("transform examples") {
  gen::Gen g(302);
  const EMField em = g.field(3.0);
  CHECK(field_diff(transform(em, lorentz::LorentzTransform()), em) == 0.0);

  // Pure E along the boost axis is unchanged.
  const EMField par{Vec3{{2.5, 0, 0}}, Vec3{}};
  const EMField tp = transform(par, lorentz::boost_x(0.9));
  CHECK(field_diff(tp, par) <= 1e-14);

  // Oracle: the explicit 4x4 triple product.
  for (int i = 0; i < 100; ++i) {
    const auto a = g.lorentz(6);
    const EMField f = g.field(2.0);
    const Mat4 ai = a.inverse().matrix();
    const Mat4 expect = matmul(matmul(ai, to_tensor(f).matrix()), transpose(ai));
    CHECK(max_abs_diff(to_tensor(transform(f, a)).matrix(), expect) <= 1e-12 * std::fmax(1.0, max_abs(expect)));
  }
}

TEST_CASE("boost of a transverse field") {
  // E = (0, E2, 0) seen from frame boost_x(φ): E2' = cosh φ E2, B3' = -sinh φ E2 (A⁻¹ F A⁻ᵀ)
  const double phi = 0.7, e2 = 1.5;
  const EMField out = transform(EMField{Vec3{{0, e2, 0}}, Vec3{}}, lorentz::boost_x(phi));
  const Mat4 ai = lorentz::boost_x(-phi).matrix();
  const Mat4 expect = matmul(matmul(ai, to_tensor(EMField{Vec3{{0, e2, 0}}, Vec3{}}).matrix()), transpose(ai));
  const EMField oracle = from_tensor(expect);
  CHECK(field_diff(out, oracle) <= 1e-14);
  CHECK(std::fabs(out.e[1]) == doctest::Approx(std::cosh(phi) * e2).epsilon(1e-14));
  CHECK(std::fabs(out.b[2]) == doctest::Approx(std::sinh(phi) * e2).epsilon(1e-14));
}

TEST_CASE("transform keeps antisymmetry and inverts") {
  gen::Gen g(303);
  for (int i = 0; i < 1000; ++i) {
    const auto a = g.lorentz(8);
    const EMField f = g.field(5.0);
    const Mat4 raw = transform_matrix(to_tensor(f).matrix(), a);
    CHECK(max_abs(antisym(raw)) <= 1e-12 * std::fmax(1.0, max_abs(raw)));
    const EMField back = transform(transform(f, a), a.inverse());
    CHECK(field_diff(back, f) <= 1e-12 * std::fmax(1.0, max_abs(raw)));
  }
}

TEST_CASE("quadratic invariants") {
  gen::Gen g(304);
  for (int i = 0; i < 10000; ++i) {
    const auto a = g.lorentz(6);
    const EMField f = g.field(1.0);
    const EMField t = transform(f, a);
    const double s = std::fmax(1.0, norm2(t.e) + norm2(t.b));
    CHECK(std::fabs(invariant_b2_minus_e2(t) - invariant_b2_minus_e2(f)) <= 1e-10 * s);
    CHECK(std::fabs(invariant_e_dot_b(t) - invariant_e_dot_b(f)) <= 1e-10 * s);
  }
}

TEST_CASE("rotations act as 3-vector rotations") {
  gen::Gen g(305);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = g.rotation();
    const EMField f = g.field(3.0);
    const EMField t = transform(f, lorentz::embed_rotation(r));
    // A⁻¹ F A⁻ᵀ with A = R: fields rotate by Rᵀ
    const Mat3 rt = transpose(r);
    CHECK(max_abs(t.e - rt * f.e) <= 1e-14 * 3 * 4);
    CHECK(max_abs(t.b - rt * f.b) <= 1e-14 * 3 * 4);
  }
}
