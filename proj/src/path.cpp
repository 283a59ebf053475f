#include "subfuse/path.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace subfuse {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Partition point_partition(const PathConfig& cfg, const Matrix& beta, const Matrix& delta) {
  const double eps = cfg.eps_fuse > 0.0 ? cfg.eps_fuse : default_eps_fuse(beta);
  return cfg.beta_rule ? extract_groups_beta(beta, eps)
                       : extract_groups(beta, delta, eps);
}

}  // namespace

AdmmState ridge_initialize(const Dataset& d, double lambda_star) {
  // The ridge system is M with vartheta = lambda*.
  AdmmWorkspace ridge_ws(d, lambda_star);
  AdmmState zero;
  zero.beta = Matrix::Zero(d.n, d.p);
  zero.delta = Matrix::Zero(ridge_ws.pair_index().count(), d.p);
  zero.upsilon = Matrix::Zero(ridge_ws.pair_index().count(), d.p);
  Matrix beta_r = update_beta(ridge_ws, d, zero);

  // Rank subjects by the median entry of their ridge coefficient vector.
  std::vector<double> med(d.n);
  for (Index i = 0; i < d.n; ++i) {
    std::vector<double> row(beta_r.row(i).begin(), beta_r.row(i).end());
    std::sort(row.begin(), row.end());
    const size_t m = row.size();
    med[i] = (m % 2 == 1) ? row[m / 2] : 0.5 * (row[m / 2 - 1] + row[m / 2]);
  }
  std::vector<Index> order(d.n);
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return med[a] < med[b]; });

  // K* = floor(sqrt(n)) contiguous size-balanced bins over the ranking.
  const Index kstar = Index(std::floor(std::sqrt(double(d.n))));
  std::vector<Index> bin(d.n);
  for (Index r = 0; r < d.n; ++r) bin[order[r]] = r * kstar / d.n;

  // Least squares with beta constant within bins: regress y on (Z, X expanded by bin).
  Matrix u(d.n, d.q + kstar * d.p);
  u.leftCols(d.q) = d.Z;
  u.rightCols(kstar * d.p).setZero();
  for (Index i = 0; i < d.n; ++i)
    u.block(i, d.q + bin[i] * d.p, 1, d.p) = d.X.row(i);
  Vector coef = u.colPivHouseholderQr().solve(d.y);

  AdmmState init;
  init.eta = coef.head(d.q);
  init.beta = Matrix(d.n, d.p);
  for (Index i = 0; i < d.n; ++i)
    init.beta.row(i) = coef.segment(d.q + bin[i] * d.p, d.p);
  init.delta = ridge_ws.a_apply(init.beta);
  init.upsilon = Matrix::Zero(ridge_ws.pair_index().count(), d.p);
  return init;
}

Vector make_lambda_grid(const PathConfig& cfg) {
  if (!(cfg.lambda_min > 0.0) || !(cfg.lambda_min < cfg.lambda_max))
    throw InvalidRangeError("make_lambda_grid: need 0 < lambda_min < lambda_max");
  if (cfg.grid_size < 2)
    throw InvalidRangeError("make_lambda_grid: grid_size must be >= 2");
  Vector grid(cfg.grid_size);
  const Index g = cfg.grid_size;
  if (cfg.grid_spacing == GridSpacing::linear) {
    for (Index k = 0; k < g; ++k)
      grid[k] = cfg.lambda_min +
                (cfg.lambda_max - cfg.lambda_min) * double(k) / double(g - 1);
  } else {
    const double la = std::log(cfg.lambda_min), lb = std::log(cfg.lambda_max);
    for (Index k = 0; k < g; ++k)
      grid[k] = std::exp(la + (lb - la) * double(k) / double(g - 1));
  }
  grid[0] = cfg.lambda_min;
  grid[g - 1] = cfg.lambda_max;
  return grid;
}

FusionPath compute_path(const Dataset& d, const PathConfig& cfg) {
  Vector grid = make_lambda_grid(cfg);
  AdmmWorkspace ws(d, cfg.vartheta);
  const double tol = cfg.tol > 0.0 ? cfg.tol : default_tol(d.n, d.p);
  AdmmState state = ridge_initialize(d);
  FusionPath path;
  path.points.reserve(grid.size());
  for (Index k = 0; k < grid.size(); ++k) {
    PenaltySpec spec{cfg.kind, grid[k], cfg.gamma};
    state = solve(ws, d, spec, std::move(state), tol, cfg.max_iter);
    PathPoint pt;
    pt.lambda = grid[k];
    pt.eta_hat = state.eta;
    pt.beta_hat = state.beta;
    pt.partition = point_partition(cfg, state.beta, state.delta);
    pt.K_hat = pt.partition.K_hat();
    pt.bic = partition_bic(d, state.eta, state.beta, pt.partition, cfg.classic_bic);
    pt.iterations = state.iter;
    pt.converged = state.converged;
    pt.primal_norm = state.primal_norm;
    pt.dual_norm = state.dual_norm;
    path.points.push_back(std::move(pt));
  }
  return path;
}

double find_full_fusion_lambda(const Dataset& d, const PathConfig& cfg, double start) {
  AdmmWorkspace ws(d, cfg.vartheta);
  const double tol = cfg.tol > 0.0 ? cfg.tol : default_tol(d.n, d.p);
  AdmmState init = ridge_initialize(d);
  double lam = start;
  for (int step = 0; step <= 10; ++step, lam *= 2.0) {
    PenaltySpec spec{cfg.kind, lam, cfg.gamma};
    AdmmState state = solve(ws, d, spec, init, tol, cfg.max_iter);
    Partition part = point_partition(cfg, state.beta, state.delta);
    if (part.K_hat() == 1) return lam;
    init = std::move(state);  // warm start the next doubling
  }
  return lam / 2.0;
}

void export_fusiongram_csv(const FusionPath& path, std::ostream& out) {
  if (path.points.empty()) throw EmptyPathError("export_fusiongram: empty path");
  out << "lambda,subject,coordinate,beta_value\n";
  for (const auto& pt : path.points)
    for (Index i = 0; i < pt.beta_hat.rows(); ++i)
      for (Index j = 0; j < pt.beta_hat.cols(); ++j)
        out << fmt(pt.lambda) << ',' << i + 1 << ',' << j + 1 << ','
            << fmt(pt.beta_hat(i, j)) << '\n';
  if (!out) throw IoError("export_fusiongram: write failed");
}

void export_path_summary_json(const FusionPath& path, std::ostream& out) {
  if (path.points.empty()) throw EmptyPathError("export_path_summary: empty path");
  out << "{\"points\":[";
  for (size_t k = 0; k < path.points.size(); ++k) {
    const auto& pt = path.points[k];
    if (k) out << ',';
    // a perfect fit has bic = -inf, which JSON cannot carry
    out << "{\"lambda\":" << fmt(pt.lambda) << ",\"k_hat\":" << pt.K_hat
        << ",\"bic\":" << (std::isfinite(pt.bic) ? fmt(pt.bic) : "-1e308")
        << ",\"converged\":"
        << (pt.converged ? "true" : "false") << ",\"iterations\":" << pt.iterations
        << '}';
  }
  out << "]}\n";
  if (!out) throw IoError("export_path_summary: write failed");
}

}  // namespace subfuse
