#include "vmlab/faraday.hpp"

#include <cmath>
#include <sstream>

#include "vmlab/error.hpp"

namespace vmlab::faraday {
namespace {

constexpr std::array<std::array<std::size_t, 2>, 6> kSlots{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

}  // namespace

FaradayTensor FaradayTensor::from_matrix(const Mat4& f, double tol) {
  const double scale = std::fmax(1.0, max_abs(f));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i; j < 4; ++j) {
      if (std::fabs(f[i][j] + f[j][i]) > tol * scale) {
        std::ostringstream os;
        os << "matrix is not antisymmetric at (" << i << "," << j << ")";
        throw ValidationError("faraday", "from_tensor", os.str());
      }
    }
  }
  FaradayTensor out;
  for (std::size_t s = 0; s < 6; ++s) out.upper_[s] = f[kSlots[s][0]][kSlots[s][1]];
  return out;
}

Mat4 FaradayTensor::matrix() const {
  Mat4 f{};
  for (std::size_t s = 0; s < 6; ++s) {
    f[kSlots[s][0]][kSlots[s][1]] = upper_[s];
    f[kSlots[s][1]][kSlots[s][0]] = -upper_[s];
  }
  return f;
}

double FaradayTensor::operator()(std::size_t i, std::size_t j) const {
  if (i == j) return 0.0;
  const bool flip = i > j;
  const std::size_t a = flip ? j : i;
  const std::size_t b = flip ? i : j;
  for (std::size_t s = 0; s < 6; ++s)
    if (kSlots[s][0] == a && kSlots[s][1] == b) return flip ? -upper_[s] : upper_[s];
  return 0.0;
}

FaradayTensor to_tensor(const EMField& em) {
  FaradayTensor f;
  f.upper_ = {em.e[0], em.e[1], em.e[2], em.b[2], -em.b[1], em.b[0]};
  return f;
}

EMField from_tensor(const FaradayTensor& f) {
  EMField em;
  em.e = Vec3{{f(0, 1), f(0, 2), f(0, 3)}};
  em.b = Vec3{{f(2, 3), -f(1, 3), f(1, 2)}};
  return em;
}

EMField from_tensor(const Mat4& f) { return from_tensor(FaradayTensor::from_matrix(f)); }

Mat4 transform_matrix(const Mat4& f, const lorentz::LorentzTransform& a) {
  const Mat4 inv = a.inverse().matrix();
  return matmul(inv, matmul(f, transpose(inv)));
}

FaradayTensor transform(const FaradayTensor& f, const lorentz::LorentzTransform& a) {
  return FaradayTensor::from_matrix(transform_matrix(f.matrix(), a), 1e-10);
}

EMField transform(const EMField& em, const lorentz::LorentzTransform& a) {
  return from_tensor(transform(to_tensor(em), a));
}

}  // namespace vmlab::faraday
