#include "subfuse/subgroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "subfuse/path.hpp"

namespace subfuse {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

Partition components_to_partition(UnionFind& uf, int n) {
  std::vector<int> root_block(n, -1);
  Partition part;
  for (int i = 0; i < n; ++i) {
    int r = uf.find(i);
    if (root_block[r] < 0) {
      root_block[r] = int(part.blocks.size());
      part.blocks.emplace_back();
    }
    part.blocks[root_block[r]].push_back(i);
  }
  return part;
}

}  // namespace

Partition extract_groups(const Matrix& beta_hat, const Matrix& delta_hat,
                         double eps_fuse) {
  const int n = int(beta_hat.rows());
  UnionFind uf(n);
  Index k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++k)
      if (delta_hat.row(k).norm() <= eps_fuse) uf.unite(i, j);
  return components_to_partition(uf, n);
}

Partition extract_groups_beta(const Matrix& beta_hat, double eps_fuse) {
  const int n = int(beta_hat.rows());
  UnionFind uf(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((beta_hat.row(i) - beta_hat.row(j)).norm() <= eps_fuse) uf.unite(i, j);
  return components_to_partition(uf, n);
}

double default_eps_fuse(const Matrix& beta_hat) {
  std::vector<double> norms(beta_hat.rows());
  for (Index i = 0; i < beta_hat.rows(); ++i) norms[i] = beta_hat.row(i).norm();
  std::sort(norms.begin(), norms.end());
  const size_t n = norms.size();
  double median = (n % 2 == 1) ? norms[n / 2] : 0.5 * (norms[n / 2 - 1] + norms[n / 2]);
  return 1e-3 * std::max(1.0, median);
}

Matrix group_estimates(const Matrix& beta_hat, const Partition& part) {
  Matrix alpha = Matrix::Zero(part.K_hat(), beta_hat.cols());
  for (Index k = 0; k < part.K_hat(); ++k) {
    for (int i : part.blocks[k]) alpha.row(k) += beta_hat.row(i);
    alpha.row(k) /= double(part.blocks[k].size());
  }
  return alpha;
}

double modified_bic(const Dataset& d, const Vector& eta_hat, const Matrix& beta_hat,
                    Index K_hat, bool classic) {
  Vector resid = d.y - d.Z * eta_hat -
                 (d.X.array() * beta_hat.array()).rowwise().sum().matrix();
  const double sse = resid.squaredNorm();
  if (sse == 0.0) return -std::numeric_limits<double>::infinity();
  const double n = double(d.n);
  const double cn = classic ? 1.0 : std::log(double(d.n * d.p + d.q));
  return std::log(sse / n) + cn * (std::log(n) / n) * double(K_hat * d.p + d.q);
}

double partition_bic(const Dataset& d, const Vector& eta_hat, const Matrix& beta_hat,
                     const Partition& part, bool classic) {
  Matrix alpha = group_estimates(beta_hat, part);
  Matrix grouped(d.n, d.p);
  for (Index k = 0; k < part.K_hat(); ++k)
    for (int i : part.blocks[k]) grouped.row(i) = alpha.row(k);
  return modified_bic(d, eta_hat, grouped, part.K_hat(), classic);
}

SubgroupResult select_model(const FusionPath& path) {
  const PathPoint* best = nullptr;
  for (const auto& pt : path.points) {
    if (!pt.converged) continue;
    // >= : ties go to the larger lambda (points are lambda-increasing)
    if (!best || best->bic >= pt.bic) best = &pt;
  }
  if (!best) throw NoConvergedPointError("select_model: no converged path point");
  SubgroupResult res;
  res.partition = best->partition;
  res.alpha_hat = group_estimates(best->beta_hat, best->partition);
  res.eta_hat = best->eta_hat;
  res.lambda_selected = best->lambda;
  res.bic = best->bic;
  return res;
}

}  // namespace subfuse
