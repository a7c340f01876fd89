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

#include "koopctl/coeff_tensor.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "koopctl/error.hpp"

namespace koopctl {

CoeffTensor::CoeffTensor(std::vector<int> extents, double time, Storage storage)
    : extents_(std::move(extents)), time_(time) {
  if (extents_.empty()) throw Error(ErrorCode::ValidationError, "tensor needs at least one axis");
  strides_.assign(extents_.size(), 1);
  lattice_size_ = 1;
  for (std::size_t k = extents_.size(); k-- > 0;) {
    if (extents_[k] < 1) throw Error(ErrorCode::ValidationError, "cutoffs must be positive");
    strides_[k] = lattice_size_;
    lattice_size_ *= static_cast<std::size_t>(extents_[k]);
  }
  dense_ = storage == Storage::Dense ||
           (storage == Storage::Auto && lattice_size_ <= kDenseLatticeLimit);
  if (dense_) dense_values_.assign(lattice_size_, 0.0);
}

CoeffTensor CoeffTensor::terminal(std::vector<int> extents, double time, Storage storage) {
  CoeffTensor t(std::move(extents), time, storage);
  if (t.extents_.back() < 2) {
    throw Error(ErrorCode::CutoffTooSmall, "the z axis must hold n_z = 1");
  }
  MultiIndex idx(t.rank(), 0);
  idx.back() = 1;
  t.set(idx, 1.0);
  return t;
}

bool CoeffTensor::in_range(std::span<const int> index) const noexcept {
  if (index.size() != extents_.size()) return false;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= extents_[k]) return false;
  }
  return true;
}

std::size_t CoeffTensor::flat_index(std::span<const int> index) const {
  if (!in_range(index)) throw Error(ErrorCode::OutOfDomain, "multi-index outside cutoffs");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    flat += static_cast<std::size_t>(index[k]) * strides_[k];
  }
  return flat;
}

MultiIndex CoeffTensor::multi_index(std::size_t flat) const {
  MultiIndex idx(extents_.size());
  for (std::size_t k = 0; k < extents_.size(); ++k) {
    idx[k] = static_cast<int>(flat / strides_[k]);
    flat %= strides_[k];
  }
  return idx;
}

double CoeffTensor::at(std::span<const int> index) const { return at_flat(flat_index(index)); }

void CoeffTensor::set(std::span<const int> index, double value) {
  set_flat(flat_index(index), value);
}

double CoeffTensor::at_flat(std::size_t flat) const {
  if (dense_) return dense_values_.at(flat);
  auto it = sparse_values_.find(flat);
  return it == sparse_values_.end() ? 0.0 : it->second;
}

void CoeffTensor::set_flat(std::size_t flat, double value) {
  if (dense_) {
    dense_values_.at(flat) = value;
  } else if (value == 0.0) {
    sparse_values_.erase(flat);
  } else {
    sparse_values_[flat] = value;
  }
}

void CoeffTensor::add_flat(std::size_t flat, double value) {
  if (dense_) {
    dense_values_[flat] += value;
  } else if (value != 0.0) {
    sparse_values_[flat] += value;
  }
}

CoeffTensor& CoeffTensor::axpy(double a, const CoeffTensor& x) {
  if (x.extents_ != extents_ || x.dense_ != dense_) {
    throw Error(ErrorCode::ValidationError, "tensor shape or storage mismatch");
  }
  if (dense_) {
    for (std::size_t i = 0; i < lattice_size_; ++i) dense_values_[i] += a * x.dense_values_[i];
  } else {
    for (const auto& [k, v] : x.sparse_values_) sparse_values_[k] += a * v;
  }
  return *this;
}

CoeffTensor& CoeffTensor::scale(double a) {
  if (dense_) {
    for (double& v : dense_values_) v *= a;
  } else {
    for (auto& [k, v] : sparse_values_) v *= a;
  }
  return *this;
}

bool CoeffTensor::all_finite() const noexcept {
  if (dense_) {
    return std::all_of(dense_values_.begin(), dense_values_.end(),
                       [](double v) { return std::isfinite(v); });
  }
  return std::all_of(sparse_values_.begin(), sparse_values_.end(),
                     [](const auto& kv) { return std::isfinite(kv.second); });
}

std::size_t CoeffTensor::nonzero_count() const noexcept {
  std::size_t n = 0;
  if (dense_) {
    for (double v : dense_values_) n += v != 0.0;
  } else {
    for (const auto& kv : sparse_values_) n += kv.second != 0.0;
  }
  return n;
}

double CoeffTensor::max_abs_diff(const CoeffTensor& other) const {
  if (other.extents_ != extents_) throw Error(ErrorCode::ValidationError, "tensor shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < lattice_size_; ++i) {
    m = std::max(m, std::fabs(at_flat(i) - other.at_flat(i)));
  }
  return m;
}

CoeffTensor CoeffTensor::zeros_like() const {
  return CoeffTensor(extents_, time_, dense_ ? Storage::Dense : Storage::Sparse);
}

void write_csv(std::ostream& os, const CoeffTensor& tensor, std::string_view provenance) {
  if (!provenance.empty()) {
    std::istringstream lines{std::string(provenance)};
    for (std::string line; std::getline(lines, line);) os << "# " << line << '\n';
  }
  os << "# extents =";
  for (int e : tensor.extents()) os << ' ' << e;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", tensor.time());
  os << "\n# time = " << buf << '\n';
  for (std::size_t k = 0; k + 1 < tensor.rank(); ++k) os << 'n' << (k + 1) << ',';
  os << "nz,value\n";
  tensor.for_each_nonzero([&](std::size_t flat, double v) {
    for (int i : tensor.multi_index(flat)) os << i << ',';
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf << '\n';
  });
}

CoeffTensor read_coeff_csv(std::istream& is) {
  std::vector<int> extents;
  double time = 0.0;
  std::vector<std::pair<MultiIndex, double>> rows;
  std::size_t columns = 0;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::ParseError, "coefficient CSV line " + std::to_string(line_no) + ": " + what);
  };
  for (std::string line; std::getline(is, line);) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key, eq;
      ls >> key >> eq;
      if (key == "extents" && eq == "=") {
        extents.clear();
        for (int e; ls >> e;) extents.push_back(e);
      } else if (key == "time" && eq == "=") {
        ls >> time;
      }
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (columns == 0) {
      if (cells.size() < 2 || cells.back() != "value" || cells[cells.size() - 2] != "nz") {
        fail("expected header n1,...,nz,value");
      }
      columns = cells.size();
      continue;
    }
    if (cells.size() != columns) fail("wrong column count");
    MultiIndex idx(columns - 1);
    try {
      for (std::size_t k = 0; k + 1 < columns; ++k) idx[k] = std::stoi(cells[k]);
      rows.emplace_back(std::move(idx), std::stod(cells.back()));
    } catch (const std::exception&) {
      fail("malformed number");
    }
  }
  if (columns == 0) fail("missing header");
  if (extents.empty()) {
    extents.assign(columns - 1, 1);
    for (const auto& [idx, v] : rows) {
      for (std::size_t k = 0; k < idx.size(); ++k) extents[k] = std::max(extents[k], idx[k] + 1);
    }
  }
  if (extents.size() != columns - 1) fail("extents do not match header");
  CoeffTensor t(extents, time);
  for (const auto& [idx, v] : rows) {
    if (!t.in_range(idx)) fail("index outside extents");
    t.set(idx, v);
  }
  return t;
}

}  // namespace koopctl
