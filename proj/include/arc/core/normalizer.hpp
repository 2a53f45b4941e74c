#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "arc/core/errors.hpp"
#include "arc/core/mlp.hpp"

namespace arc {

/// Per-dimension affine map x -> (x - shift) / scale applied to network inputs.
struct Normalizer {
  Vector shift;
  Vector scale;

  static Normalizer identity(int dim) { return {Vector::Zero(dim), Vector::Ones(dim)}; }

  /// Mean and standard deviation of the columns of `data`. Dimensions with
  /// spread below `min_std` keep scale `min_std`.
  static Normalizer from_columns(const Matrix& data, double min_std = 1e-6) {
    require(data.cols() > 0, "Normalizer::from_columns: no data");
    Normalizer n;
    n.shift = data.rowwise().mean();
    const Matrix centered = data.colwise() - n.shift;
    n.scale = (centered.array().square().rowwise().sum() / static_cast<double>(data.cols())).sqrt().matrix();
    n.scale = n.scale.cwiseMax(min_std);
    return n;
  }

  /// Stacks two normalizers for concatenated inputs [x; y].
  static Normalizer concat(const Normalizer& a, const Normalizer& b) {
    Normalizer n;
    n.shift.resize(a.dim() + b.dim());
    n.scale.resize(a.dim() + b.dim());
    n.shift << a.shift, b.shift;
    n.scale << a.scale, b.scale;
    return n;
  }

  int dim() const { return static_cast<int>(shift.size()); }

  Matrix apply(const Matrix& x) const {
    require(x.rows() == dim(), "Normalizer::apply: dimension mismatch");
    return ((x.colwise() - shift).array().colwise() / scale.array()).matrix();
  }

  /// Converts a gradient w.r.t. normalized inputs into one w.r.t. raw inputs.
  Matrix pullback(const Matrix& grad_normalized) const {
    return (grad_normalized.array().colwise() / scale.array()).matrix();
  }

  bool operator==(const Normalizer& o) const { return shift == o.shift && scale == o.scale; }
};

}  // namespace arc
