/*
 * Copyright 2026 The fscl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace fscl::nn {

// How a tensor participates in optimization.
enum class ParamKind : std::uint8_t {
  Weight,  // trained, decoupled weight decay applies
  Bias,    // trained, no decay
  Norm,    // batch-norm gamma/beta: trained, no decay
  Buffer,  // running statistics: never touched by the optimizer
};

// Kind implied by a tensor's leaf name (U_*, W_*, weight -> Weight; b_*, bias ->
// Bias; gamma, beta -> Norm; running_* -> Buffer).
ParamKind infer_kind(std::string_view name) noexcept;

struct Tensor {
  std::string name;
  std::vector<std::uint32_t> shape;
  ParamKind kind = ParamKind::Weight;
  std::vector<double> values;

  std::size_t numel() const noexcept { return values.size(); }
  std::size_t rows() const noexcept { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const noexcept { return shape.size() < 2 ? 1 : shape[1]; }
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

MatrixMap as_matrix(Tensor& t);
ConstMatrixMap as_matrix(const Tensor& t);
VectorMap as_vector(Tensor& t);
ConstVectorMap as_vector(const Tensor& t);

// Ordered bundle of named model tensors. Order is layer order, then tensor
// names in lexicographic order within each layer; it is the serialization
// and aggregation order.
class ParamSet {
 public:
  ParamSet() = default;

  Tensor& add(std::string name, std::vector<std::uint32_t> shape, ParamKind kind);

  std::size_t size() const noexcept { return tensors_.size(); }
  bool empty() const noexcept { return tensors_.empty(); }
  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }

  // Throws ShapeError when the name is absent.
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  const Tensor* find(std::string_view name) const noexcept;

  auto begin() noexcept { return tensors_.begin(); }
  auto end() noexcept { return tensors_.end(); }
  auto begin() const noexcept { return tensors_.begin(); }
  auto end() const noexcept { return tensors_.end(); }

  std::size_t scalar_count() const noexcept;

  // Same names, kinds and shapes in the same order.
  bool same_layout(const ParamSet& other) const noexcept;
  void require_same_layout(const ParamSet& other, std::string_view context) const;

  ParamSet zeros_like() const;

  friend bool operator==(const ParamSet& a, const ParamSet& b) noexcept;

 private:
  std::vector<Tensor> tensors_;
};

bool operator==(const Tensor& a, const Tensor& b) noexcept;

// Largest |a - b| over all scalars; layouts must match.
double max_abs_difference(const ParamSet& a, const ParamSet& b);

}  // namespace fscl::nn
