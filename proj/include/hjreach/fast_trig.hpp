#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>

namespace hjreach {

// Branch-free sin/cos pair on an auto-vectorizable path. Quadrant reduction
// is Cody-Waite in three parts with the magic-number round-to-nearest trick;
// the kernels are the classic double-precision minimax polynomials on
// [-pi/4, pi/4] (about 1 ulp there, well under 1e-14 absolute over the
// |x| <= 1e8 range handled here). Larger and non-finite arguments are
// repaired with libm afterwards.
namespace fasttrig {

constexpr double kTwoOverPi = 0.63661977236758134308;
constexpr double kDP1 = 1.5707962512969970703125;   // pi/2 head
constexpr double kDP2 = 7.54978941586159635336e-8;  // pi/2 middle
constexpr double kDP3 = 5.39030285815811904913e-15; // pi/2 tail
constexpr double kHugeArg = 1e8;
constexpr double kMagic = 6755399441055744.0;  // 1.5 * 2^52

// valid only for |x| <= kHugeArg and finite x
inline void sincos_core(double x, double* s, double* c) {
  const double qm = x * kTwoOverPi + kMagic;
  std::int64_t ji;
  std::memcpy(&ji, &qm, 8);  // low mantissa bits hold the rounded integer
  const double q = qm - kMagic;
  double r = x - q * kDP1;
  r -= q * kDP2;
  r -= q * kDP3;
  const double z = r * r;

  double sp = 1.58962301576546568060e-10;
  sp = sp * z - 2.50507477628578072866e-8;
  sp = sp * z + 2.75573136213857245213e-6;
  sp = sp * z - 1.98412698295895385996e-4;
  sp = sp * z + 8.33333333333332211858e-3;
  sp = sp * z - 1.66666666666666307295e-1;
  const double sin_r = r + r * z * sp;

  double cp = -1.13585365213876817300e-11;
  cp = cp * z + 2.08757008419747316778e-9;
  cp = cp * z - 2.75573141792967388112e-7;
  cp = cp * z + 2.48015872888517179954e-5;
  cp = cp * z - 1.38888888888730564116e-3;
  cp = cp * z + 4.16666666666665929218e-2;
  const double cos_r = 1.0 - 0.5 * z + z * z * cp;

  const bool swap = ji & 1;
  const double s_mag = swap ? cos_r : sin_r;
  const double c_mag = swap ? sin_r : cos_r;
  *s = (ji & 2) ? -s_mag : s_mag;
  *c = ((ji + 1) & 2) ? -c_mag : c_mag;
}

}  // namespace fasttrig

inline void fast_sincos(double x, double* s, double* c) {
  if (!(std::abs(x) <= fasttrig::kHugeArg)) {  // also catches NaN/inf
    *s = std::sin(x);
    *c = std::cos(x);
    return;
  }
  fasttrig::sincos_core(x, s, c);
}

// s[i] = sin(scale * x[i]), c[i] = cos(scale * x[i])
inline void fast_sincos_array(const double* x, double scale, double* s,
                              double* c, std::size_t n) {
  bool repair = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double arg = scale * x[i];
    const bool ok = std::abs(arg) <= fasttrig::kHugeArg;
    repair |= !ok;
    fasttrig::sincos_core(ok ? arg : 0.0, &s[i], &c[i]);
  }
  if (repair) {
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = scale * x[i];
      if (!(std::abs(arg) <= fasttrig::kHugeArg)) {
        s[i] = std::sin(arg);
        c[i] = std::cos(arg);
      }
    }
  }
}

}  // namespace hjreach
