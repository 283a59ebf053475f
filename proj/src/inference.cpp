#include "subfuse/inference.hpp"

#include <cmath>

namespace subfuse {

namespace {

// Continued-fraction evaluation of the regularized incomplete beta I_x(a,b)
// (Lentz's method).
double betacf(double a, double b, double x) {
  const double tiny = 1e-300, eps = 1e-16;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

double inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// Acklam's rational approximation refined by one Halley step.
double inv_normal(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double q, x;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (p <= phigh) {
    q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

}  // namespace

GroupDesign build_group_design(const Dataset& d, const Partition& part) {
  GroupDesign gd;
  gd.n = d.n;
  gd.p = d.p;
  gd.q = d.q;
  gd.K = part.K_hat();
  gd.W_tilde = Matrix::Zero(d.n, gd.K);
  gd.X_tilde = Matrix::Zero(d.n, gd.K * d.p);
  for (Index k = 0; k < gd.K; ++k)
    for (int i : part.blocks[k]) {
      gd.W_tilde(i, k) = 1.0;
      gd.X_tilde.block(i, k * d.p, 1, d.p) = d.X.row(i);
    }
  gd.U = Matrix(d.n, d.q + gd.K * d.p);
  gd.U.leftCols(d.q) = d.Z;
  gd.U.rightCols(gd.K * d.p) = gd.X_tilde;
  return gd;
}

double sigma2_hat(const Dataset& d, const Vector& eta_hat, const Matrix& beta_hat,
                  Index K_hat) {
  const Index dof = d.n - d.q - K_hat * d.p;
  if (dof <= 0)
    throw NonPositiveDofError("sigma2_hat: n - q - Kp must be positive");
  Vector resid = d.y - d.Z * eta_hat -
                 (d.X.array() * beta_hat.array()).rowwise().sum().matrix();
  return resid.squaredNorm() / double(dof);
}

double asymptotic_sd(const GroupDesign& gd, double sigma2, const Vector& a,
                     SdTarget target) {
  const Matrix& Z = gd.U.leftCols(gd.q);
  const Matrix& Xt = gd.X_tilde;
  Matrix schur;
  if (target == SdTarget::eta) {
    Eigen::LDLT<Matrix> xtxt(Xt.transpose() * Xt);
    if (xtxt.info() != Eigen::Success)
      throw SingularSchurError("asymptotic_sd: X_tilde'X_tilde not factorizable");
    Matrix ztxt = Z.transpose() * Xt;
    schur = Z.transpose() * Z - ztxt * xtxt.solve(ztxt.transpose());
  } else {
    Eigen::LDLT<Matrix> ztz(Z.transpose() * Z);
    if (ztz.info() != Eigen::Success)
      throw SingularSchurError("asymptotic_sd: Z'Z not factorizable");
    Matrix xtz = Xt.transpose() * Z;
    schur = Xt.transpose() * Xt - xtz * ztz.solve(xtz.transpose());
  }
  Eigen::LDLT<Matrix> fac(schur);
  if (fac.info() != Eigen::Success || !fac.isPositive())
    throw SingularSchurError("asymptotic_sd: Schur complement not positive definite");
  return std::sqrt(sigma2 * a.dot(fac.solve(a)));
}

std::vector<Interval> confidence_intervals(const Vector& point_estimates,
                                           const Vector& asds, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw InvalidLevelError("confidence_intervals: level must be in (0,1)");
  if (point_estimates.size() != asds.size())
    throw ShapeMismatchError("confidence_intervals: size mismatch");
  const double z = inv_normal(1.0 - (1.0 - level) / 2.0);
  std::vector<Interval> out(point_estimates.size());
  for (Index i = 0; i < point_estimates.size(); ++i)
    out[i] = {point_estimates[i] - z * asds[i], point_estimates[i] + z * asds[i]};
  return out;
}

Matrix default_contrast(Index K, Index p) {
  Matrix L = Matrix::Zero(p, K * p);
  L.leftCols(p) = Matrix::Identity(p, p);
  L.block(0, p, p, p) = -Matrix::Identity(p, p);
  return L;
}

FTestResult f_test(const GroupDesign& gd, const Matrix& alpha_hat, double sigma2,
                   const Matrix& L) {
  const Index d2 = gd.n - gd.p * gd.K - gd.q - 1;
  if (d2 <= 0) throw NonPositiveDofError("f_test: n - pK - q - 1 must be positive");
  const Matrix& Z = gd.U.leftCols(gd.q);
  const Matrix& Xt = gd.X_tilde;
  Matrix xtz = Xt.transpose() * Z;
  Eigen::LDLT<Matrix> ztz(Z.transpose() * Z);
  Matrix sigma_n = Xt.transpose() * Xt - xtz * ztz.solve(xtz.transpose());
  Eigen::LDLT<Matrix> sn(sigma_n);
  if (sn.info() != Eigen::Success)
    throw SingularContrastCovarianceError("f_test: Sigma_n not factorizable");
  Vector la(L.rows());
  {
    // alpha stacked K-major: (alpha_1', ..., alpha_K')'
    Vector alpha_vec(gd.K * gd.p);
    for (Index k = 0; k < gd.K; ++k)
      alpha_vec.segment(k * gd.p, gd.p) = alpha_hat.row(k);
    la = L * alpha_vec;
  }
  Matrix cov = sigma2 * (L * sn.solve(L.transpose()));
  Eigen::LDLT<Matrix> covf(cov);
  if (covf.info() != Eigen::Success || !covf.isPositive())
    throw SingularContrastCovarianceError("f_test: L Sigma_n^-1 L' singular");
  FTestResult res;
  res.f = la.dot(covf.solve(la)) / double(gd.p);
  res.dof = {gd.p, d2};
  res.p_value = 1.0 - f_cdf(res.f, double(gd.p), double(d2));
  return res;
}

double f_cdf(double x, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw InvalidDofError("f_cdf: dof must be positive");
  if (x < 0.0) throw NegativeArgumentError("f_cdf: x < 0");
  if (x == 0.0) return 0.0;
  return inc_beta(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2));
}

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0))
    throw InvalidLevelError("normal_quantile: prob must be in (0,1)");
  return inv_normal(prob);
}

InferenceReport infer(const Dataset& d, const SubgroupResult& sel, double level) {
  InferenceReport rep;
  rep.level = level;
  GroupDesign gd = build_group_design(d, sel.partition);
  const Index K = gd.K;
  Matrix beta_full(d.n, d.p);
  for (Index k = 0; k < K; ++k)
    for (int i : sel.partition.blocks[k]) beta_full.row(i) = sel.alpha_hat.row(k);
  rep.sigma2_hat = sigma2_hat(d, sel.eta_hat, beta_full, K);

  rep.asd_eta = Vector(d.q);
  for (Index j = 0; j < d.q; ++j)
    rep.asd_eta[j] = asymptotic_sd(gd, rep.sigma2_hat, Vector::Unit(d.q, j),
                                   SdTarget::eta);
  rep.asd_alpha = Vector(K * d.p);
  for (Index j = 0; j < K * d.p; ++j)
    rep.asd_alpha[j] = asymptotic_sd(gd, rep.sigma2_hat, Vector::Unit(K * d.p, j),
                                     SdTarget::alpha);
  rep.ci_eta = confidence_intervals(sel.eta_hat, rep.asd_eta, level);
  Vector alpha_vec(K * d.p);
  for (Index k = 0; k < K; ++k)
    alpha_vec.segment(k * d.p, d.p) = sel.alpha_hat.row(k);
  rep.ci_alpha = confidence_intervals(alpha_vec, rep.asd_alpha, level);

  if (K >= 2 && d.n - d.p * K - d.q - 1 > 0) {
    FTestResult ft = f_test(gd, sel.alpha_hat, rep.sigma2_hat,
                            default_contrast(K, d.p));
    rep.f_stat = ft.f;
    rep.dof = ft.dof;
    rep.p_value = ft.p_value;
    rep.f_test_available = true;
  }
  return rep;
}

}  // namespace subfuse
