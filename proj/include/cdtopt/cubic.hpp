#ifndef CDTOPT_CUBIC_HPP
#define CDTOPT_CUBIC_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

namespace cdtopt {

/// Up to three real roots, sorted in descending order.
template <typename Scalar>
struct RealRoots {
  std::array<Scalar, 3> values{};
  std::size_t count = 0;

  const Scalar* begin() const { return values.data(); }
  const Scalar* end() const { return values.data() + count; }
  Scalar operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return count; }
};

template <typename Scalar>
Scalar eval_cubic(Scalar c3, Scalar c2, Scalar c1, Scalar c0, Scalar x) {
  return ((c3 * x + c2) * x + c1) * x + c0;
}

namespace detail {

template <typename Scalar>
Scalar newton_polish(Scalar c3, Scalar c2, Scalar c1, Scalar c0, Scalar x) {
  using std::abs;
  Scalar fx = eval_cubic(c3, c2, c1, c0, x);
  for (int it = 0; it < 8 && fx != Scalar(0); ++it) {
    const Scalar dfx = (Scalar(3) * c3 * x + Scalar(2) * c2) * x + c1;
    if (dfx == Scalar(0)) break;
    const Scalar next = x - fx / dfx;
    const Scalar fnext = eval_cubic(c3, c2, c1, c0, next);
    if (!(abs(fnext) < abs(fx))) break;
    x = next;
    fx = fnext;
  }
  return x;
}

}  // namespace detail

/// Real roots of c3 x^3 + c2 x^2 + c1 x + c0 = 0 (c3 != 0).
///
/// Reduces to the depressed cubic t^3 + p t + q and picks Cardano's form
/// (one real root) or the trigonometric form (three real roots) from the sign
/// of the discriminant; each root then gets a guarded Newton polish on the
/// original polynomial. Repeated roots are reported once per multiplicity
/// that the trigonometric branch produces.
template <typename Scalar>
RealRoots<Scalar> solve_real_cubic(Scalar c3, Scalar c2, Scalar c1, Scalar c0) {
  using std::abs;
  using std::acos;
  using std::cbrt;
  using std::cos;
  using std::sqrt;

  const Scalar b = c2 / c3;
  const Scalar c = c1 / c3;
  const Scalar d = c0 / c3;
  const Scalar shift = b / Scalar(3);
  const Scalar p = c - b * b / Scalar(3);
  const Scalar q = Scalar(2) * b * b * b / Scalar(27) - b * c / Scalar(3) + d;
  const Scalar disc = q * q / Scalar(4) + p * p * p / Scalar(27);

  RealRoots<Scalar> roots;
  if (disc > Scalar(0)) {
    // Take the cube root of the larger-magnitude term to avoid cancellation.
    const Scalar s = sqrt(disc);
    const Scalar u = cbrt(q > Scalar(0) ? -q / Scalar(2) - s : -q / Scalar(2) + s);
    const Scalar t = (u != Scalar(0)) ? u - p / (Scalar(3) * u) : Scalar(0);
    roots.values[0] = t - shift;
    roots.count = 1;
  } else if (p == Scalar(0)) {
    roots.values.fill(-shift);
    roots.count = 3;
  } else {
    const Scalar r = Scalar(2) * sqrt(-p / Scalar(3));
    Scalar arg = Scalar(3) * q / (p * r);
    arg = std::clamp(arg, Scalar(-1), Scalar(1));
    const Scalar phi = acos(arg) / Scalar(3);
    const Scalar two_pi_3 = Scalar(2) * std::numbers::pi_v<Scalar> / Scalar(3);
    for (int k = 0; k < 3; ++k) {
      roots.values[k] = r * cos(phi - two_pi_3 * Scalar(k)) - shift;
    }
    roots.count = 3;
  }

  for (std::size_t i = 0; i < roots.count; ++i) {
    roots.values[i] = detail::newton_polish(c3, c2, c1, c0, roots.values[i]);
  }
  std::sort(roots.values.begin(), roots.values.begin() + roots.count,
            [](Scalar x, Scalar y) { return x > y; });
  return roots;
}

}  // namespace cdtopt

#endif  // CDTOPT_CUBIC_HPP
