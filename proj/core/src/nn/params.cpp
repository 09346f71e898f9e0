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

#include "fscl/nn/params.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "fscl/error.hpp"

namespace fscl::nn {

ParamKind infer_kind(std::string_view name) noexcept {
  const auto slash = name.rfind('/');
  const auto leaf = slash == std::string_view::npos ? name : name.substr(slash + 1);
  if (leaf.starts_with("running_")) return ParamKind::Buffer;
  if (leaf == "gamma" || leaf == "beta") return ParamKind::Norm;
  if (leaf.starts_with("b_") || leaf == "bias") return ParamKind::Bias;
  return ParamKind::Weight;
}

MatrixMap as_matrix(Tensor& t) {
  return MatrixMap(t.values.data(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}

ConstMatrixMap as_matrix(const Tensor& t) {
  return ConstMatrixMap(t.values.data(), static_cast<Eigen::Index>(t.rows()),
                        static_cast<Eigen::Index>(t.cols()));
}

VectorMap as_vector(Tensor& t) {
  return VectorMap(t.values.data(), static_cast<Eigen::Index>(t.numel()));
}

ConstVectorMap as_vector(const Tensor& t) {
  return ConstVectorMap(t.values.data(), static_cast<Eigen::Index>(t.numel()));
}

Tensor& ParamSet::add(std::string name, std::vector<std::uint32_t> shape, ParamKind kind) {
  if (find(name) != nullptr) throw ShapeError("duplicate tensor name: " + name);
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                        std::multiplies<>());
  Tensor t;
  t.name = std::move(name);
  t.shape = std::move(shape);
  t.kind = kind;
  t.values.assign(n, 0.0);
  tensors_.push_back(std::move(t));
  return tensors_.back();
}

const Tensor* ParamSet::find(std::string_view name) const noexcept {
  auto it = std::find_if(tensors_.begin(), tensors_.end(),
                         [&](const Tensor& t) { return t.name == name; });
  return it == tensors_.end() ? nullptr : &*it;
}

const Tensor& ParamSet::get(std::string_view name) const {
  const Tensor* t = find(name);
  if (t == nullptr) throw ShapeError("no tensor named " + std::string(name));
  return *t;
}

Tensor& ParamSet::get(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).get(name));
}

std::size_t ParamSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.numel();
  return n;
}

bool ParamSet::same_layout(const ParamSet& other) const noexcept {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto& a = tensors_[i];
    const auto& b = other.tensors_[i];
    if (a.name != b.name || a.shape != b.shape || a.kind != b.kind) return false;
  }
  return true;
}

void ParamSet::require_same_layout(const ParamSet& other, std::string_view context) const {
  if (!same_layout(other))
    throw ShapeError(std::string(context) + ": parameter layouts do not match");
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out = *this;
  for (auto& t : out.tensors_) std::fill(t.values.begin(), t.values.end(), 0.0);
  return out;
}

bool operator==(const Tensor& a, const Tensor& b) noexcept {
  return a.name == b.name && a.shape == b.shape && a.kind == b.kind && a.values == b.values;
}

bool operator==(const ParamSet& a, const ParamSet& b) noexcept { return a.tensors_ == b.tensors_; }

double max_abs_difference(const ParamSet& a, const ParamSet& b) {
  a.require_same_layout(b, "max_abs_difference");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a[i].numel(); ++k)
      worst = std::max(worst, std::abs(a[i].values[k] - b[i].values[k]));
  return worst;
}

}  // namespace fscl::nn
