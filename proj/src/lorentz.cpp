#include "vmlab/lorentz.hpp"

#include <cmath>
#include <sstream>

#include "vmlab/error.hpp"

namespace vmlab {

double det4(const Mat4& m) {
  // Laplace expansion along the first row.
  double det = 0.0;
  for (std::size_t c = 0; c < 4; ++c) {
    Mat3 minor{};
    for (std::size_t i = 1; i < 4; ++i) {
      std::size_t jj = 0;
      for (std::size_t j = 0; j < 4; ++j) {
        if (j == c) continue;
        minor[i - 1][jj++] = m[i][j];
      }
    }
    const double sign = (c % 2 == 0) ? 1.0 : -1.0;
    det += sign * m[0][c] * det3(minor);
  }
  return det;
}

namespace lorentz {
namespace {

constexpr double kMaxRapidity = 700.0;

Mat4 eta_matrix() {
  Mat4 e = identity4();
  e[0][0] = -1.0;
  return e;
}

double metric_defect_of(const Mat4& m) {
  const Mat4 eta = eta_matrix();
  const Mat4 g = matmul(transpose(m), matmul(eta, m));
  const double scale = std::fmax(1.0, max_abs(m) * max_abs(m));
  return max_abs_diff(g, eta) / scale;
}

}  // namespace

LorentzTransform LorentzTransform::from_matrix(const Mat4& m, double tol) {
  for (const auto& row : m)
    for (double x : row)
      if (!std::isfinite(x))
        throw ValidationError("lorentz", "from_matrix", "matrix has non-finite entries");
  const double defect = metric_defect_of(m);
  if (defect > tol) {
    std::ostringstream os;
    os << "matrix does not preserve the Minkowski metric (defect " << defect << ")";
    throw ValidationError("lorentz", "from_matrix", os.str());
  }
  if (m[0][0] < 1.0 - tol)
    throw ValidationError("lorentz", "from_matrix", "matrix is not orthochronous (m00 < 1)");
  const double scale = std::pow(std::fmax(1.0, max_abs(m)), 4);
  if (std::fabs(det4(m) - 1.0) > tol * scale)
    throw ValidationError("lorentz", "from_matrix", "matrix is not proper (det != 1)");
  bool is_rotation = std::fabs(m[0][0] - 1.0) <= tol;
  for (std::size_t i = 1; i < 4 && is_rotation; ++i)
    is_rotation = std::fabs(m[0][i]) <= tol && std::fabs(m[i][0]) <= tol;
  return LorentzTransform(m, is_rotation ? TransformKind::rotation : TransformKind::general, 0.0);
}

LorentzTransform LorentzTransform::inverse() const {
  // η mᵀ η flips the sign of the mixed time-space entries of mᵀ.
  Mat4 inv = transpose(m_);
  for (std::size_t i = 1; i < 4; ++i) {
    inv[0][i] = -inv[0][i];
    inv[i][0] = -inv[i][0];
  }
  return LorentzTransform(inv, kind_, -phi_);
}

FourVector LorentzTransform::operator()(const FourVector& X) const {
  const std::array<double, 4> in{X.t, X.x[0], X.x[1], X.x[2]};
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i)
    out[i] = m_[i][0] * in[0] + m_[i][1] * in[1] + m_[i][2] * in[2] + m_[i][3] * in[3];
  return FourVector{out[0], Vec3{{out[1], out[2], out[3]}}};
}

Mat3 LorentzTransform::spatial_block() const {
  Mat3 r{};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) r[i][j] = m_[i + 1][j + 1];
  return r;
}

LorentzTransform operator*(const LorentzTransform& a, const LorentzTransform& b) {
  const Mat4 m = matmul(a.m_, b.m_);
  if (a.kind_ == TransformKind::boost_x && b.kind_ == TransformKind::boost_x)
    return LorentzTransform(m, TransformKind::boost_x, a.phi_ + b.phi_);
  if (a.kind_ == TransformKind::rotation && b.kind_ == TransformKind::rotation)
    return LorentzTransform(m, TransformKind::rotation, 0.0);
  return LorentzTransform(m, TransformKind::general, 0.0);
}

double LorentzTransform::metric_defect() const { return metric_defect_of(m_); }

LorentzTransform boost_x(double phi) {
  if (!std::isfinite(phi) || std::fabs(phi) > kMaxRapidity) {
    std::ostringstream os;
    os << "boost_x: rapidity " << phi << " overflows cosh in double precision";
    throw DomainError("lorentz", "boost_x", os.str());
  }
  Mat4 m = identity4();
  const double ch = std::cosh(phi);
  const double sh = std::sinh(phi);
  m[0][0] = ch;
  m[0][1] = sh;
  m[1][0] = sh;
  m[1][1] = ch;
  return LorentzTransform(m, TransformKind::boost_x, phi);
}

LorentzTransform embed_rotation(const Mat3& r, double tol) {
  const Mat3 rtr = matmul(transpose(r), r);
  if (max_abs_diff(rtr, identity3()) > tol)
    throw ValidationError("lorentz", "embed_rotation", "matrix is not orthogonal");
  if (std::fabs(det3(r) - 1.0) > tol)
    throw ValidationError("lorentz", "embed_rotation", "matrix is not a proper rotation (det != 1)");
  Mat4 m = identity4();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) m[i + 1][j + 1] = r[i][j];
  return LorentzTransform(m, TransformKind::rotation, 0.0);
}

FourVector apply(const LorentzTransform& a, const FourVector& X) { return a(X); }

Mat3 axis_angle(const Vec3& axis, double angle) {
  const double n = norm(axis);
  if (!(n > 0.0)) return identity3();
  const Vec3 k = axis / n;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double t = 1.0 - c;
  return Mat3{{{c + k[0] * k[0] * t, k[0] * k[1] * t - k[2] * s, k[0] * k[2] * t + k[1] * s},
               {k[1] * k[0] * t + k[2] * s, c + k[1] * k[1] * t, k[1] * k[2] * t - k[0] * s},
               {k[2] * k[0] * t - k[1] * s, k[2] * k[1] * t + k[0] * s, c + k[2] * k[2] * t}}};
}

namespace {

// R = I + [k]x + [k]x^2 / (1 + c) with k = e1 x n, c = e1 . n; valid for c > 0.
Mat3 rotation_e1_to_near(const Vec3& n) {
  const Vec3 k{{0.0, -n[2], n[1]}};
  const double c = n[0];
  const Mat3 kx{{{0.0, -k[2], k[1]}, {k[2], 0.0, -k[0]}, {-k[1], k[0], 0.0}}};
  const Mat3 kx2 = matmul(kx, kx);
  Mat3 r = identity3();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) r[i][j] += kx[i][j] + kx2[i][j] / (1.0 + c);
  return r;
}

}  // namespace

Mat3 rotation_e1_to(const Vec3& n_in) {
  const Vec3 n = n_in / norm(n_in);
  if (n[0] >= 0.0) return rotation_e1_to_near(n);
  // Half turn about e3 first, so the remaining rotation is far from antipodal.
  const Mat3 half_turn{{{-1.0, 0.0, 0.0}, {0.0, -1.0, 0.0}, {0.0, 0.0, 1.0}}};
  return matmul(half_turn, rotation_e1_to_near(half_turn * n));
}

Decomposition decompose(const LorentzTransform& a) {
  const Mat4& m = a.matrix();
  (void)LorentzTransform::from_matrix(m, 1e-9);

  const Vec3 s{{m[1][0], m[2][0], m[3][0]}};
  const double sh = norm(s);
  if (sh < 1e-12) {
    // a fixes the time axis: it is a rotation up to roundoff.
    Mat3 r{};
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) r[i][j] = m[i + 1][j + 1];
    return Decomposition{embed_rotation(r, 1e-8), 0.0, LorentzTransform()};
  }
  const double phi = std::asinh(sh);
  const LorentzTransform r1 = embed_rotation(rotation_e1_to(s));
  const LorentzTransform rest = boost_x(-phi) * r1.inverse() * a;
  Mat3 r2{};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) r2[i][j] = rest.matrix()[i + 1][j + 1];
  const double scale = std::fmax(1.0, max_abs(m));
  for (std::size_t i = 1; i < 4; ++i) {
    if (std::fabs(rest.matrix()[0][i]) > 1e-8 * scale || std::fabs(rest.matrix()[i][0]) > 1e-8 * scale)
      throw ValidationError("lorentz", "decompose", "residual factor is not a rotation");
  }
  return Decomposition{r1, phi, embed_rotation(r2, 1e-8 * scale)};
}

LorentzTransform boost_to_rest(const FourVector& p) {
  const double r = norm(p.x);
  if (!(p.t > 0.0) || !(r < p.t) || !std::isfinite(p.t) || !is_finite(p.x)) {
    throw DomainError("lorentz", "boost_to_rest", "target is not a future-directed timelike vector");
  }
  if (r == 0.0) return LorentzTransform();
  const double tau = std::sqrt((p.t - r) * (p.t + r));
  const double phi = std::asinh(r / tau);
  const LorentzTransform rot = embed_rotation(rotation_e1_to(p.x));
  return rot * boost_x(phi);
}

double onset_time(const LorentzTransform& a, double support_k) {
  if (a.kind() == TransformKind::rotation) return 0.0;
  if (a.kind() == TransformKind::boost_x) return std::fabs(std::sinh(a.rapidity())) * support_k;
  return std::fabs(std::sinh(decompose(a).phi)) * support_k;
}

}  // namespace lorentz
}  // namespace vmlab
