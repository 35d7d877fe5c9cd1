#pragma once

#include <numeric>
#include <vector>

namespace equipart {

/// One-line notation, 0-based: sigma[i] is the image of i.
using Permutation = std::vector<int>;

inline Permutation identity_permutation(int k) {
  Permutation p(k);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

/// Composition convention: (sigma . tau)(i) = sigma(tau(i)).
inline Permutation compose(const Permutation& sigma, const Permutation& tau) {
  Permutation out(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) out[i] = sigma[tau[i]];
  return out;
}

inline Permutation inverse(const Permutation& sigma) {
  Permutation out(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) out[sigma[i]] = static_cast<int>(i);
  return out;
}

inline bool is_identity(const Permutation& sigma) {
  for (std::size_t i = 0; i < sigma.size(); ++i)
    if (sigma[i] != static_cast<int>(i)) return false;
  return true;
}

inline bool is_valid_permutation(const Permutation& sigma) {
  std::vector<bool> seen(sigma.size(), false);
  for (int v : sigma) {
    if (v < 0 || v >= static_cast<int>(sigma.size()) || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

/// The cycle (a1 a2 ... am) on {0..k-1}: a1 -> a2 -> ... -> am -> a1.
inline Permutation cycle(int k, const std::vector<int>& orbit) {
  Permutation p = identity_permutation(k);
  for (std::size_t i = 0; i < orbit.size(); ++i)
    p[orbit[i]] = orbit[(i + 1) % orbit.size()];
  return p;
}

}  // namespace equipart
