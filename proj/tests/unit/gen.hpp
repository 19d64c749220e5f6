#pragma once

// Seeded generators for property tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "vmlab/faraday.hpp"
#include "vmlab/lorentz.hpp"
#include "vmlab/vec3.hpp"

namespace gen {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * unit(); }

  vmlab::Vec3 cube(double r) { return vmlab::Vec3{{uniform(-r, r), uniform(-r, r), uniform(-r, r)}}; }

  vmlab::Vec3 ball(double r) {
    while (true) {
      const vmlab::Vec3 p = cube(1.0);
      if (vmlab::norm2(p) < 1.0) return r * p;
    }
  }

  vmlab::Vec3 direction() {
    while (true) {
      const vmlab::Vec3 p = ball(1.0);
      const double n = vmlab::norm(p);
      if (n > 1e-3) return p / n;
    }
  }

  vmlab::Mat3 rotation() { return vmlab::lorentz::axis_angle(direction(), uniform(-std::numbers::pi, std::numbers::pi)); }

  vmlab::lorentz::LorentzTransform factor(double max_phi) {
    if (unit() < 0.5) return vmlab::lorentz::embed_rotation(rotation());
    return vmlab::lorentz::boost_x(uniform(-max_phi, max_phi));
  }

  /// Product of `n` random boosts and rotations.
  vmlab::lorentz::LorentzTransform lorentz(int n, double max_phi = 0.3) {
    vmlab::lorentz::LorentzTransform a;
    for (int i = 0; i < n; ++i) a = a * factor(max_phi);
    return a;
  }

  vmlab::FourVector four(double r) { return vmlab::FourVector{uniform(-r, r), cube(r)}; }

  vmlab::EMField field(double r) { return vmlab::EMField{cube(r), cube(r)}; }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace gen
