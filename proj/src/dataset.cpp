#include "subfuse/dataset.hpp"

#include <cmath>

namespace subfuse {

namespace {

bool is_constant_ones(const Vector& col) {
  return (col.array() - 1.0).abs().maxCoeff() == 0.0;
}

}  // namespace

Dataset make_dataset(Vector y, Matrix Z, Matrix X) {
  Dataset d;
  const Index n = y.size();
  if (Z.rows() != n || X.rows() != n)
    throw ShapeMismatchError("make_dataset: row counts differ from length of y");
  bool has_intercept = Z.cols() > 0 && is_constant_ones(Z.col(0));
  if (!has_intercept) {
    Matrix Z2(n, Z.cols() + 1);
    Z2.col(0).setOnes();
    if (Z.cols() > 0) Z2.rightCols(Z.cols()) = Z;
    Z = std::move(Z2);
  }
  d.y = std::move(y);
  d.Z = std::move(Z);
  d.X = std::move(X);
  d.n = n;
  d.q = d.Z.cols();
  d.p = d.X.cols();
  return d;
}

Dataset validate_dataset(const Dataset& raw) {
  if (raw.n < 2 || raw.p < 1 || raw.q < 1)
    throw ShapeMismatchError("validate_dataset: need n >= 2, p >= 1, q >= 1");
  if (raw.y.size() != raw.n || raw.Z.rows() != raw.n || raw.X.rows() != raw.n ||
      raw.Z.cols() != raw.q || raw.X.cols() != raw.p)
    throw ShapeMismatchError("validate_dataset: inconsistent shapes");
  for (Index i = 0; i < raw.n; ++i) {
    if (!std::isfinite(raw.y[i]))
      throw NonFiniteError("validate_dataset: y[" + std::to_string(i) + "] non-finite");
    for (Index j = 0; j < raw.q; ++j)
      if (!std::isfinite(raw.Z(i, j)))
        throw NonFiniteError("validate_dataset: Z(" + std::to_string(i) + "," +
                             std::to_string(j) + ") non-finite");
    for (Index j = 0; j < raw.p; ++j)
      if (!std::isfinite(raw.X(i, j)))
        throw NonFiniteError("validate_dataset: X(" + std::to_string(i) + "," +
                             std::to_string(j) + ") non-finite");
  }
  if (!is_constant_ones(raw.Z.col(0)))
    throw ShapeMismatchError("validate_dataset: Z column 1 is not the intercept");
  Eigen::ColPivHouseholderQR<Matrix> qr(raw.Z);
  if (qr.rank() < raw.q)
    throw RankDeficientZError("validate_dataset: Z is rank deficient (rank " +
                              std::to_string(qr.rank()) + " < q = " +
                              std::to_string(raw.q) + ")");
  return raw;
}

std::pair<Dataset, StandardizationInfo> standardize(const Dataset& d) {
  Dataset out = d;
  const Index m = (d.q - 1) + d.p;
  StandardizationInfo info;
  info.column_means = Vector::Zero(m);
  info.column_scales = Vector::Ones(m);
  auto one_column = [&](Eigen::Ref<Vector> col, Index slot, Index label) {
    const double mean = col.mean();
    Vector centered = col.array() - mean;
    const double scale = std::sqrt(centered.squaredNorm() / double(d.n));
    if (scale <= 0.0)
      throw ZeroVarianceColumnError("standardize: constant column " +
                                    std::to_string(label));
    col = centered / scale;
    info.column_means[slot] = mean;
    info.column_scales[slot] = scale;
  };
  for (Index j = 1; j < d.q; ++j) one_column(out.Z.col(j), j - 1, j);
  for (Index j = 0; j < d.p; ++j) one_column(out.X.col(j), (d.q - 1) + j, d.q + j);
  return {std::move(out), std::move(info)};
}

std::pair<Vector, Matrix> unstandardize(const Vector& eta_hat,
                                        const Matrix& alpha_hat,
                                        const StandardizationInfo& info) {
  const Index q = eta_hat.size();
  const Index p = alpha_hat.cols();
  if (info.column_means.size() != (q - 1) + p)
    throw ShapeMismatchError("unstandardize: info length mismatch");
  Vector eta = eta_hat;
  Matrix alpha = alpha_hat;
  double intercept_shift = 0.0;
  for (Index j = 1; j < q; ++j) {
    eta[j] = eta_hat[j] / info.column_scales[j - 1];
    intercept_shift += info.column_means[j - 1] * eta[j];
  }
  for (Index j = 0; j < p; ++j)
    alpha.col(j) = alpha_hat.col(j) / info.column_scales[(q - 1) + j];
  // Group-specific centering offsets cannot share one intercept when K > 1;
  // the equal-weight mean keeps the map deterministic and exact for K = 1.
  Vector alpha_bar = alpha.colwise().mean();
  for (Index j = 0; j < p; ++j)
    intercept_shift += info.column_means[(q - 1) + j] * alpha_bar[j];
  eta[0] = eta_hat[0] - intercept_shift;
  return {std::move(eta), std::move(alpha)};
}

}  // namespace subfuse
