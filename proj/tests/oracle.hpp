#pragma once
// Reference implementations used to check the library. Products are reduced
// to explicit words of basis vectors and statistics are computed in two naive
// passes, so nothing here shares a table or a code path with the code under
// test.

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hopfsim/multivector.hpp"

namespace oracle {

// Basis-vector factor lists for the eight storage slots, each in the slot's
// own orientation.
inline const std::array<std::vector<int>, 8>& slot_factors() {
  static const std::array<std::vector<int>, 8> f{
      {{}, {0}, {1}, {2}, {1, 2}, {2, 0}, {0, 1}, {0, 1, 2}}};
  return f;
}

struct ReducedWord {
  int slot = 0;
  double sign = 1.0;
};

namespace detail {

// Bubble sort with a sign flip per swap of distinct letters.
inline double sort_word(std::vector<int>& word) {
  double sign = 1.0;
  bool moved = true;
  while (moved) {
    moved = false;
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
      if (word[i] > word[i + 1]) {
        std::swap(word[i], word[i + 1]);
        sign = -sign;
        moved = true;
      }
    }
  }
  return sign;
}

}  // namespace detail

// Reduces a word of basis-vector indices: sort with sign tracking, cancel
// equal neighbors (e_i e_i = 1), then identify the surviving ascending word
// with a slot.
inline ReducedWord reduce_word(std::vector<int> word) {
  double sign = detail::sort_word(word);
  std::vector<int> rest;
  for (const int v : word) {
    if (!rest.empty() && rest.back() == v)
      rest.pop_back();
    else
      rest.push_back(v);
  }
  for (int slot = 0; slot < 8; ++slot) {
    std::vector<int> probe = slot_factors()[static_cast<std::size_t>(slot)];
    const double probe_sign = detail::sort_word(probe);
    if (probe == rest) return {slot, sign * probe_sign};
  }
  throw std::logic_error("reduce_word: no slot matches the reduced word");
}

// Reference geometric product by word concatenation.
inline hopfsim::Multivector gp(const hopfsim::Multivector& a, const hopfsim::Multivector& b) {
  hopfsim::Multivector out;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      std::vector<int> word = slot_factors()[static_cast<std::size_t>(i)];
      const auto& tail = slot_factors()[static_cast<std::size_t>(j)];
      word.insert(word.end(), tail.begin(), tail.end());
      const ReducedWord r = reduce_word(word);
      out.c[static_cast<std::size_t>(r.slot)] += a.c[i] * b.c[j] * r.sign;
    }
  }
  return out;
}

// Two-pass mean and standard deviation over the 8 components.
inline hopfsim::Multivector mean(std::span<const hopfsim::Multivector> xs) {
  hopfsim::Multivector m;
  for (const auto& x : xs) m = m + x;
  return m * (1.0 / static_cast<double>(xs.size()));
}

inline double stddev(std::span<const hopfsim::Multivector> xs) {
  const hopfsim::Multivector m = mean(xs);
  double acc = 0.0;
  for (const auto& x : xs) acc += hopfsim::norm_squared(x - m);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

// Plain trapezoid quadrature.
inline double trapezoid(const std::function<double(double)>& f, double lo, double hi, int n) {
  double acc = 0.5 * (f(lo) + f(hi));
  const double h = (hi - lo) / static_cast<double>(n);
  for (int i = 1; i < n; ++i) acc += f(lo + static_cast<double>(i) * h);
  return acc * h;
}

}  // namespace oracle
