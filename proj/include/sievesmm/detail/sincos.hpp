#pragma once

#include <cmath>
#include <cstddef>

namespace sievesmm::detail {

// Branch-free sine/cosine with Cody-Waite reduction and fdlibm kernels.
// Accurate to a few ulp for |x| up to ~1e9; written so loops over it vectorize.
inline void sincos_fast(double x, double& s, double& c) noexcept {
  constexpr double two_over_pi = 0.63661977236758134308;
  constexpr double p1 = 1.5707963267341256e+00;
  constexpr double p2 = 6.077100506506192e-11;
  constexpr double p3 = 2.0222662487959506e-21;
  const double k = std::nearbyint(x * two_over_pi);
  const double r = ((x - k * p1) - k * p2) - k * p3;
  const double z = r * r;
  const double sp =
      r + r * z *
              (-1.66666666666666324348e-01 +
               z * (8.33333333332248946124e-03 +
                    z * (-1.98412698298579493134e-04 +
                         z * (2.75573137070700676789e-06 +
                              z * (-2.50507602534068634195e-08 + z * 1.58969099521155010221e-10)))));
  const double cp =
      1.0 - 0.5 * z +
      z * z *
          (4.16666666666666019037e-02 +
           z * (-1.38888888888741095749e-03 +
                z * (2.48015872894767294178e-05 +
                     z * (-2.75573143513906633035e-07 +
                          z * (2.08757232129817482790e-09 + z * -1.13596475577881948265e-11)))));
  const double h = k * 0.5;
  const bool swap = (h - std::floor(h)) != 0.0;
  double q = k * 0.25;
  q = q - std::floor(q);
  const double s0 = swap ? cp : sp;
  const double c0 = swap ? sp : cp;
  s = q >= 0.5 ? -s0 : s0;
  c = (q == 0.25 || q == 0.5) ? -c0 : c0;
}

} // namespace sievesmm::detail
