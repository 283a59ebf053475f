#include <doctest.h>

#include <cmath>
#include <sstream>

#include "subfuse/path.hpp"
#include "test_util.hpp"

using namespace subfuse;
using namespace subfuse::testutil;

namespace {

PathConfig small_cfg(double lo, double hi, Index g) {
  PathConfig cfg;
  cfg.lambda_min = lo;
  cfg.lambda_max = hi;
  cfg.grid_size = g;
  return cfg;
}

}  // namespace

TEST_CASE("lambda grid spacing") {
  PathConfig cfg = small_cfg(0.01, 1.0, 5);
  Vector g = make_lambda_grid(cfg);
  CHECK(g.size() == 5);
  CHECK(g[0] == 0.01);
  CHECK(g[4] == 1.0);
  // log spacing: constant ratio 10^(1/2)
  for (Index k = 1; k < 5; ++k)
    CHECK(g[k] / g[k - 1] == doctest::Approx(std::sqrt(10.0)).epsilon(1e-12));

  cfg.grid_spacing = GridSpacing::linear;
  g = make_lambda_grid(cfg);
  CHECK(g[1] == doctest::Approx(0.2575));
  CHECK(g[2] == doctest::Approx(0.505));

  cfg.lambda_min = 0.0;
  CHECK_THROWS_AS(make_lambda_grid(cfg), InvalidRangeError);
  cfg.lambda_min = 2.0;  // above lambda_max
  CHECK_THROWS_AS(make_lambda_grid(cfg), InvalidRangeError);
  cfg = small_cfg(0.1, 1.0, 1);
  CHECK_THROWS_AS(make_lambda_grid(cfg), InvalidRangeError);
}

TEST_CASE("ridge initializer produces a bin-constant warm start") {
  Dataset d = grouped_dataset(30, 1, 2, 2.0, 0.3, 501);
  AdmmState init = ridge_initialize(d);
  CHECK(init.beta.rows() == 30);
  CHECK(init.delta.rows() == 30 * 29 / 2);
  CHECK(init.upsilon.cwiseAbs().maxCoeff() == 0.0);
  // delta0 is exactly the pairwise differences of beta0
  Index k = 0;
  for (Index i = 0; i < 30; ++i)
    for (Index j = i + 1; j < 30; ++j, ++k)
      CHECK((init.delta.row(k) - (init.beta.row(i) - init.beta.row(j)))
                .cwiseAbs()
                .maxCoeff() < 1e-14);
  // at most floor(sqrt(n)) distinct rows
  std::vector<double> vals;
  for (Index i = 0; i < 30; ++i) vals.push_back(init.beta(i, 0));
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  CHECK(Index(vals.size()) <= Index(std::floor(std::sqrt(30.0))));
  CHECK(init.eta.size() == 2);
}

TEST_CASE("path separates two groups and fuses at large lambda") {
  Dataset d = grouped_dataset(40, 1, 2, 2.0, 0.25, 601);
  PathConfig cfg = small_cfg(0.05, 4.0, 25);
  FusionPath path = compute_path(d, cfg);
  REQUIRE(path.points.size() == 25);
  // lambda strictly increasing
  for (size_t k = 1; k < path.points.size(); ++k)
    CHECK(path.points[k].lambda > path.points[k - 1].lambda);
  // the largest lambda fully fuses, some middle lambda finds exactly 2 groups
  CHECK(path.points.back().K_hat == 1);
  bool saw_two = false;
  for (const auto& pt : path.points) saw_two = saw_two || pt.K_hat == 2;
  CHECK(saw_two);
  // K_hat at the fused end is below the start (heterogeneous) end
  CHECK(path.points.back().K_hat <= path.points.front().K_hat);

  SUBCASE("determinism") {
    FusionPath again = compute_path(d, cfg);
    for (size_t k = 0; k < path.points.size(); ++k) {
      CHECK(again.points[k].lambda == path.points[k].lambda);
      CHECK((again.points[k].beta_hat - path.points[k].beta_hat)
                .cwiseAbs()
                .maxCoeff() == 0.0);
      CHECK(again.points[k].bic == path.points[k].bic);
      CHECK(again.points[k].iterations == path.points[k].iterations);
    }
  }

  SUBCASE("every point on this easy instance converges") {
    for (const auto& pt : path.points) CHECK(pt.converged);
  }

  SUBCASE("warm-started points are no worse than cold starts") {
    AdmmWorkspace ws(d, cfg.vartheta);
    double tol = default_tol(d.n, d.p);
    const auto& pt = path.points[12];
    PenaltySpec spec{cfg.kind, pt.lambda, cfg.gamma};
    AdmmState cold = solve(ws, d, spec, ridge_initialize(d), tol, cfg.max_iter);
    double warm_obj = objective(d, pt.eta_hat, pt.beta_hat, spec);
    double cold_obj = objective(d, cold.eta, cold.beta, spec);
    CHECK(warm_obj <= cold_obj + 1e-4 * (1.0 + std::abs(cold_obj)));
  }
}

TEST_CASE("full-fusion doubling search") {
  Dataset d = grouped_dataset(24, 1, 2, 2.0, 0.3, 701);
  PathConfig cfg = small_cfg(0.1, 1.0, 5);
  double lam = find_full_fusion_lambda(d, cfg, 0.25);
  // verify with a direct solve at the reported lambda
  AdmmWorkspace ws(d, cfg.vartheta);
  AdmmState st = solve(ws, d, {cfg.kind, lam, cfg.gamma}, ridge_initialize(d),
                       default_tol(d.n, d.p), cfg.max_iter);
  Partition part = extract_groups(st.beta, st.delta, default_eps_fuse(st.beta));
  CHECK(part.K_hat() == 1);
}

TEST_CASE("fusiongram export") {
  Dataset d = grouped_dataset(8, 2, 2, 1.5, 0.3, 801);
  FusionPath path = compute_path(d, small_cfg(0.2, 2.0, 3));
  std::ostringstream out;
  export_fusiongram_csv(path, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "lambda,subject,coordinate,beta_value");
  Index rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3 * 8 * 2);  // grid points x subjects x coordinates

  std::ostringstream again;
  export_fusiongram_csv(path, again);
  CHECK(out.str() == again.str());  // byte-identical re-export

  FusionPath empty;
  std::ostringstream sink;
  CHECK_THROWS_AS(export_fusiongram_csv(empty, sink), EmptyPathError);
}

TEST_CASE("path summary export") {
  Dataset d = grouped_dataset(8, 1, 2, 1.5, 0.3, 901);
  FusionPath path = compute_path(d, small_cfg(0.2, 2.0, 4));
  std::ostringstream out;
  export_path_summary_json(path, out);
  const std::string s = out.str();
  CHECK(s.find("\"points\":[") != std::string::npos);
  CHECK(s.find("\"k_hat\":") != std::string::npos);
  CHECK(s.find("\"converged\":true") != std::string::npos);
  // four point objects
  size_t count = 0;
  for (size_t pos = 0; (pos = s.find("\"lambda\":", pos)) != std::string::npos; ++pos)
    ++count;
  CHECK(count == 4);
}
