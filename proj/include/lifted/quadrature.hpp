#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace lifted::quad {

struct Options {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  int max_intervals = 4000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;  // sum of |K21 - G10| over the final partition
  int intervals = 0;
  int evaluations = 0;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved error " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

namespace detail {

// 21-point Kronrod abscissae on [-1, 1]; odd entries are the 10-point Gauss nodes.
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Piece {
  double a, b, value, error;
  friend bool operator<(const Piece& l, const Piece& r) { return l.error < r.error; }
};

template <class F>
Piece gk21(F& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double kronrod = fc * kWgk[10];
  double gauss = 0.0;
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    const double sum = f(centre - dx) + f(centre + dx);
    kronrod += kWgk[j] * sum;
    if (j % 2 == 1) gauss += kWg[j / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Globally adaptive 21-point Gauss-Kronrod integration of f over [a, b].
/// The interval with the largest error estimate is bisected until the total
/// estimate is below max(abs_tol, rel_tol * |value|).
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  if (!(b >= a)) throw std::invalid_argument("integrate: need a <= b");
  Result res;
  if (a == b) return res;

  std::vector<detail::Piece> heap;
  heap.reserve(64);
  heap.push_back(detail::gk21(f, a, b));
  res.evaluations = 21;
  double value = heap.front().value;
  double error = heap.front().error;

  auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(value)); };
  while (error > target()) {
    if (static_cast<int>(heap.size()) >= opt.max_intervals)
      throw QuadratureError("integrate: interval budget exhausted", error);
    std::pop_heap(heap.begin(), heap.end());
    const detail::Piece worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b))
      throw QuadratureError("integrate: interval cannot be subdivided further", error);
    const detail::Piece left = detail::gk21(f, worst.a, mid);
    const detail::Piece right = detail::gk21(f, mid, worst.b);
    res.evaluations += 42;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end());
    // Re-sum to avoid drift in the running totals.
    if (heap.size() % 64 == 0) {
      value = error = 0.0;
      for (const auto& p : heap) {
        value += p.value;
        error += p.error;
      }
    }
  }
  value = error = 0.0;
  for (const auto& p : heap) {
    value += p.value;
    error += p.error;
  }
  res.value = value;
  res.error = error;
  res.intervals = static_cast<int>(heap.size());
  if (!std::isfinite(value)) throw QuadratureError("integrate: non-finite integral", error);
  return res;
}

/// Integral of f over [a, inf) through the map x = a + t / (1 - t), t in [0, 1).
template <class F>
Result integrate_to_infinity(F&& f, double a, const Options& opt = {}) {
  auto mapped = [&](double t) {
    const double s = 1.0 - t;
    const double v = f(a + t / s);
    return v == 0.0 ? 0.0 : v / (s * s);
  };
  return integrate(mapped, 0.0, 1.0, opt);
}

}  // namespace lifted::quad
