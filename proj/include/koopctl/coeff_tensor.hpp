/*
 Copyright 2026 The koopctl Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <algorithm>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace koopctl {

/// Lattice position (n₁, …, n_N, n_z); the last entry is the power of z.
using MultiIndex = std::vector<int>;

/// Lattices up to this many points are stored densely, larger ones in a hash map.
inline constexpr std::size_t kDenseLatticeLimit = 10000;

enum class Storage { Auto, Dense, Sparse };

/// Truncated coefficients P(n₁, …, n_N, n_z, t) of ψ′ = Σ P x^n z^{n_z}.
/// Axis k holds indices 0 ≤ n_k < extents[k].
class CoeffTensor {
 public:
  CoeffTensor() = default;
  explicit CoeffTensor(std::vector<int> extents, double time = 0.0,
                       Storage storage = Storage::Auto);

  /// P(0, …, 0, n_z = 1) = 1, everything else zero.
  static CoeffTensor terminal(std::vector<int> extents, double time,
                              Storage storage = Storage::Auto);

  [[nodiscard]] const std::vector<int>& extents() const noexcept { return extents_; }
  [[nodiscard]] std::size_t rank() const noexcept { return extents_.size(); }
  [[nodiscard]] std::size_t lattice_size() const noexcept { return lattice_size_; }
  [[nodiscard]] bool is_dense() const noexcept { return dense_; }
  [[nodiscard]] double time() const noexcept { return time_; }
  void set_time(double t) noexcept { time_ = t; }

  [[nodiscard]] bool in_range(std::span<const int> index) const noexcept;
  [[nodiscard]] std::size_t flat_index(std::span<const int> index) const;
  [[nodiscard]] MultiIndex multi_index(std::size_t flat) const;
  [[nodiscard]] const std::vector<std::size_t>& strides() const noexcept { return strides_; }

  [[nodiscard]] double at(std::span<const int> index) const;
  void set(std::span<const int> index, double value);

  [[nodiscard]] double at_flat(std::size_t flat) const;
  void set_flat(std::size_t flat, double value);
  void add_flat(std::size_t flat, double value);

  /// Calls f(flat, value) for every stored nonzero, in lexicographic order.
  template <class F>
  void for_each_nonzero(F&& f) const {
    if (dense_) {
      for (std::size_t i = 0; i < dense_values_.size(); ++i) {
        if (dense_values_[i] != 0.0) f(i, dense_values_[i]);
      }
      return;
    }
    std::vector<std::size_t> keys;
    keys.reserve(sparse_values_.size());
    for (const auto& [k, v] : sparse_values_) {
      if (v != 0.0) keys.push_back(k);
    }
    std::sort(keys.begin(), keys.end());
    for (std::size_t k : keys) f(k, sparse_values_.at(k));
  }

  [[nodiscard]] std::span<const double> dense_values() const noexcept { return dense_values_; }
  [[nodiscard]] std::span<double> dense_values() noexcept { return dense_values_; }
  [[nodiscard]] const std::unordered_map<std::size_t, double>& sparse_values() const noexcept {
    return sparse_values_;
  }

  /// this ← this + a·x. Both tensors must share extents and storage kind.
  CoeffTensor& axpy(double a, const CoeffTensor& x);
  CoeffTensor& scale(double a);

  [[nodiscard]] bool all_finite() const noexcept;
  [[nodiscard]] std::size_t nonzero_count() const noexcept;
  [[nodiscard]] double max_abs_diff(const CoeffTensor& other) const;

  /// Same extents, time and storage kind, all zeros.
  [[nodiscard]] CoeffTensor zeros_like() const;

 private:
  std::vector<int> extents_;
  std::vector<std::size_t> strides_;
  std::size_t lattice_size_ = 0;
  double time_ = 0.0;
  bool dense_ = true;
  std::vector<double> dense_values_;
  std::unordered_map<std::size_t, double> sparse_values_;
};

/// CSV with header `n1,...,nN,nz,value`, one row per nonzero in lexicographic
/// index order. `#` comment lines carry the extents, time and `provenance`.
void write_csv(std::ostream& os, const CoeffTensor& tensor, std::string_view provenance = {});
CoeffTensor read_coeff_csv(std::istream& is);

}  // namespace koopctl
