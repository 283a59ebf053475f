#include "subfuse/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <atomic>
#include <thread>

#include "subfuse/inference.hpp"
#include "subfuse/rng.hpp"

namespace subfuse {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t m = v.size();
  return (m % 2 == 1) ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / double(v.size() - 1));
}

// Centers a 0/1 column and rescales to squared norm n; redraws while the
// column is constant so the transform is defined.
void center_binomial(Rng& rng, Eigen::Ref<Vector> col, double prob) {
  const Index n = col.size();
  for (;;) {
    bool all_same = true;
    for (Index i = 1; i < n; ++i)
      if (col[i] != col[0]) { all_same = false; break; }
    if (!all_same) break;
    for (Index i = 0; i < n; ++i) col[i] = rng.bernoulli(prob) ? 1.0 : 0.0;
  }
  const double mu = col.mean();
  col.array() -= mu;
  col *= std::sqrt(double(n) / col.squaredNorm());
}

}  // namespace

std::pair<Dataset, TrueModel> generate(const DgpSpec& spec) {
  if (spec.n < 10) throw InvalidRangeError("generate: n must be >= 10");
  if (!(spec.alpha_scale > 0.0))
    throw InvalidRangeError("generate: alpha_scale must be positive");
  const Index n = spec.n, q = 5;
  const Index p = (spec.example == Example::two) ? 3 : 1;
  const double rho = 0.3, sigma = 0.5;
  Rng rng(spec.seed);

  Vector eta(q);
  for (Index k = 0; k < q; ++k) eta[k] = rng.uniform(1.0, 2.0);

  Matrix alpha;
  if (spec.example == Example::one) {
    alpha = Matrix(2, 1);
    alpha << 2.0, -2.0;
  } else if (spec.example == Example::two) {
    alpha = Matrix(2, 3);
    alpha.row(0).setConstant(spec.alpha_scale);
    alpha.row(1).setConstant(-spec.alpha_scale);
  } else {
    alpha = Matrix(1, 1);
    alpha << 2.0;
  }
  const Index K = alpha.rows();

  Matrix Z(n, q), X(n, p);
  Vector eps(n);
  std::vector<int> member(n, 0);
  const double sr = std::sqrt(rho), si = std::sqrt(1.0 - rho);
  for (Index i = 0; i < n; ++i) {
    Z(i, 0) = 1.0;
    const double shared = rng.normal();
    for (Index j = 1; j < q; ++j) Z(i, j) = sr * shared + si * rng.normal();
    X(i, 0) = rng.normal();
    if (spec.example == Example::two)
      for (Index j = 1; j < 3; ++j) X(i, j) = rng.bernoulli(0.7) ? 1.0 : 0.0;
    if (K == 2) member[i] = rng.bernoulli(0.5) ? 0 : 1;
    eps[i] = sigma * rng.normal();
  }
  if (spec.example == Example::two)
    for (Index j = 1; j < 3; ++j) center_binomial(rng, X.col(j), 0.7);

  Vector y(n);
  for (Index i = 0; i < n; ++i)
    y[i] = Z.row(i).dot(eta) + X.row(i).dot(alpha.row(member[i])) + eps[i];

  TrueModel truth;
  truth.eta = eta;
  truth.sigma = sigma;
  for (Index k = 0; k < K; ++k) {
    std::vector<int> block;
    for (Index i = 0; i < n; ++i)
      if (member[i] == k) block.push_back(int(i));
    if (!block.empty()) {
      truth.partition.push_back(std::move(block));
      truth.alpha.conservativeResize(truth.alpha.rows() + 1, p);
      truth.alpha.row(truth.alpha.rows() - 1) = alpha.row(k);
    }
  }
  return {validate_dataset(make_dataset(std::move(y), std::move(Z), std::move(X))),
          std::move(truth)};
}

std::pair<Vector, Matrix> oracle_fit(const Dataset& d, const TrueModel& truth) {
  const Index K = Index(truth.partition.size());
  Matrix u(d.n, d.q + K * d.p);
  u.leftCols(d.q) = d.Z;
  u.rightCols(K * d.p).setZero();
  for (Index k = 0; k < K; ++k)
    for (int i : truth.partition[k])
      u.block(i, d.q + k * d.p, 1, d.p) = d.X.row(i);
  Vector coef = u.colPivHouseholderQr().solve(d.y);
  Matrix alpha(K, d.p);
  for (Index k = 0; k < K; ++k) alpha.row(k) = coef.segment(d.q + k * d.p, d.p);
  return {coef.head(d.q), std::move(alpha)};
}

namespace {

ReplicationRecord run_one(const StudyConfig& cfg, Index rep) {
  ReplicationRecord rec;
  rec.rep = rep;
  rec.seed = derive_seed(cfg.dgp.seed, std::uint64_t(rep));
  DgpSpec ds = cfg.dgp;
  ds.seed = rec.seed;
  auto [d, truth] = generate(ds);
  const Index K_true = Index(truth.partition.size());
  FusionPath path = compute_path(d, cfg.path);
  SubgroupResult sel = select_model(path);
  rec.k_hat = sel.partition.K_hat();
  rec.lambda = sel.lambda_selected;
  rec.bic = sel.bic;

  const PathPoint* selected = nullptr;
  for (const auto& pt : path.points)
    if (pt.lambda == sel.lambda_selected) selected = &pt;
  const Matrix& beta_hat = selected->beta_hat;

  // Match each true group to the estimated block with the largest overlap;
  // the treatment-effect estimate for the group is that block's coefficient.
  std::vector<Index> match(K_true, 0);
  for (Index k = 0; k < K_true; ++k) {
    size_t best_overlap = 0;
    for (Index b = 0; b < rec.k_hat; ++b) {
      size_t overlap = 0;
      for (int i : truth.partition[k])
        if (std::binary_search(sel.partition.blocks[b].begin(),
                               sel.partition.blocks[b].end(), i))
          ++overlap;
      if (overlap > best_overlap) { best_overlap = overlap; match[k] = b; }
    }
  }
  rec.alpha_hat.resize(K_true);
  for (Index k = 0; k < K_true; ++k) rec.alpha_hat[k] = sel.alpha_hat(match[k], 0);
  rec.eta_mse = (sel.eta_hat - truth.eta).norm() / std::sqrt(double(d.q));
  rec.k_true = K_true;

  auto [eta_or, alpha_or] = oracle_fit(d, truth);
  rec.alpha_oracle.resize(K_true);
  for (Index k = 0; k < K_true; ++k) rec.alpha_oracle[k] = alpha_or(k, 0);

  if (d.n - d.q - d.p * rec.k_hat > 0) {
    GroupDesign gd = build_group_design(d, sel.partition);
    Matrix beta_grouped(d.n, d.p);
    for (Index k = 0; k < rec.k_hat; ++k)
      for (int i : sel.partition.blocks[k])
        beta_grouped.row(i) = sel.alpha_hat.row(k);
    double s2 = sigma2_hat(d, sel.eta_hat, beta_grouped, rec.k_hat);
    if (rec.k_hat >= 2 && d.n - d.p * rec.k_hat - d.q - 1 > 0) {
      // Contrast the groups with the largest and smallest leading effect.
      Index kmax = 0, kmin = 0;
      for (Index k = 1; k < rec.k_hat; ++k) {
        if (sel.alpha_hat(k, 0) > sel.alpha_hat(kmax, 0)) kmax = k;
        if (sel.alpha_hat(k, 0) < sel.alpha_hat(kmin, 0)) kmin = k;
      }
      if (kmax != kmin) {
        Matrix L = Matrix::Zero(d.p, rec.k_hat * d.p);
        L.block(0, kmax * d.p, d.p, d.p) = Matrix::Identity(d.p, d.p);
        L.block(0, kmin * d.p, d.p, d.p) = -Matrix::Identity(d.p, d.p);
        rec.p_value = f_test(gd, sel.alpha_hat, s2, L).p_value;
      }
    }
    if (rec.k_hat == K_true) {
      // ASD of each true group's leading effect at its matched block.
      rec.asd.resize(K_true);
      for (Index k = 0; k < K_true; ++k)
        rec.asd[k] = asymptotic_sd(
            gd, s2, Vector::Unit(rec.k_hat * d.p, match[k] * d.p), SdTarget::alpha);
    }
  }
  return rec;
}

}  // namespace

StudyResult run_study(const StudyConfig& cfg) {
  if (cfg.reps < 1) throw InvalidRangeError("run_study: reps must be >= 1");
  std::vector<ReplicationRecord> records(cfg.reps);
  const Index workers = std::max<Index>(1, cfg.threads);
  std::atomic<Index> next{0};
  auto work = [&] {
    for (;;) {
      Index r = next.fetch_add(1);
      if (r >= cfg.reps) break;
      try {
        records[r] = run_one(cfg, r);
      } catch (const Error&) {
        records[r].rep = r;
        records[r].seed = derive_seed(cfg.dgp.seed, std::uint64_t(r));
        records[r].failed = true;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (Index t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  ReplicationSummary s;
  s.reps = cfg.reps;
  std::vector<double> k_hats, p_values;
  Index K_true = 0;
  for (const auto& rec : records)
    if (!rec.failed) { K_true = rec.k_true; break; }
  std::vector<std::vector<double>> alpha_by_group(K_true), oracle_by_group(K_true),
      asd_by_group(K_true);
  Index correct = 0;
  for (const auto& rec : records) {
    if (rec.failed) { ++s.failures; continue; }
    k_hats.push_back(double(rec.k_hat));
    if (rec.k_hat == rec.k_true) ++correct;
    s.eta_mse_distribution.push_back(rec.eta_mse);
    if (rec.p_value >= 0.0) p_values.push_back(rec.p_value);
    for (Index k = 0; k < std::min<Index>(K_true, Index(rec.alpha_hat.size())); ++k) {
      alpha_by_group[k].push_back(rec.alpha_hat[k]);
      oracle_by_group[k].push_back(rec.alpha_oracle[k]);
      if (!rec.asd.empty()) asd_by_group[k].push_back(rec.asd[k]);
    }
  }
  const Index done = Index(k_hats.size());
  s.k_hat_mean = mean_of(k_hats);
  s.k_hat_median = median_of(k_hats);
  s.k_hat_sd = sd_of(k_hats);
  s.pct_correct_k = done > 0 ? double(correct) / double(done) : 0.0;
  s.alpha_stats.resize(K_true);
  for (Index k = 0; k < K_true; ++k) {
    s.alpha_stats[k].mean = mean_of(alpha_by_group[k]);
    s.alpha_stats[k].median = median_of(alpha_by_group[k]);
    s.alpha_stats[k].esd = sd_of(alpha_by_group[k]);
    s.alpha_stats[k].asd = mean_of(asd_by_group[k]);
    s.alpha_stats[k].oracle_mean = mean_of(oracle_by_group[k]);
  }
  s.p_value_mean = p_values.empty() ? 1.0 : mean_of(p_values);
  s.p_value_median = p_values.empty() ? 1.0 : median_of(p_values);
  s.p_value_count = Index(p_values.size());

  StudyResult out;
  out.summary = std::move(s);
  if (cfg.keep_ledger) out.ledger = std::move(records);
  return out;
}

void write_summary_json(const ReplicationSummary& s, std::ostream& out) {
  out << "{\"reps\":" << s.reps << ",\"failures\":" << s.failures
      << ",\"k_hat_mean\":" << fmt(s.k_hat_mean)
      << ",\"k_hat_median\":" << fmt(s.k_hat_median)
      << ",\"k_hat_sd\":" << fmt(s.k_hat_sd)
      << ",\"pct_correct_k\":" << fmt(s.pct_correct_k) << ",\"alpha_stats\":[";
  for (size_t k = 0; k < s.alpha_stats.size(); ++k) {
    const auto& g = s.alpha_stats[k];
    if (k) out << ',';
    out << "{\"mean\":" << fmt(g.mean) << ",\"median\":" << fmt(g.median)
        << ",\"asd\":" << fmt(g.asd) << ",\"esd\":" << fmt(g.esd)
        << ",\"oracle_mean\":" << fmt(g.oracle_mean) << '}';
  }
  out << "],\"eta_mse\":[";
  for (size_t i = 0; i < s.eta_mse_distribution.size(); ++i) {
    if (i) out << ',';
    out << fmt(s.eta_mse_distribution[i]);
  }
  out << "],\"p_value_mean\":" << fmt(s.p_value_mean)
      << ",\"p_value_median\":" << fmt(s.p_value_median)
      << ",\"p_value_count\":" << s.p_value_count << "}\n";
  if (!out) throw IoError("write_summary_json: write failed");
}

void write_ledger_csv(const std::vector<ReplicationRecord>& ledger, std::ostream& out) {
  out << "rep,seed,failed,k_hat,lambda,bic,eta_mse,p_value,alpha_hat\n";
  for (const auto& r : ledger) {
    out << r.rep << ',' << r.seed << ',' << (r.failed ? 1 : 0) << ',' << r.k_hat
        << ',' << fmt(r.lambda) << ',' << fmt(r.bic) << ',' << fmt(r.eta_mse) << ','
        << fmt(r.p_value) << ',';
    for (size_t k = 0; k < r.alpha_hat.size(); ++k) {
      if (k) out << ';';
      out << fmt(r.alpha_hat[k]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write_ledger_csv: write failed");
}

void write_fit_lines_csv(const Dataset& d, const TrueModel& truth,
                         const Matrix& beta_hat, std::ostream& out) {
  Matrix beta_true(d.n, d.p);
  for (size_t k = 0; k < truth.partition.size(); ++k)
    for (int i : truth.partition[k]) beta_true.row(i) = truth.alpha.row(Index(k));
  // pooled OLS treatment effect
  Matrix u(d.n, d.q + d.p);
  u.leftCols(d.q) = d.Z;
  u.rightCols(d.p) = d.X;
  Vector coef = u.colPivHouseholderQr().solve(d.y);
  Vector beta_ols = coef.tail(d.p);
  out << "x,fit_true,fit_est,fit_ols\n";
  for (Index i = 0; i < d.n; ++i)
    out << fmt(d.X(i, 0)) << ',' << fmt(d.X.row(i).dot(beta_true.row(i))) << ','
        << fmt(d.X.row(i).dot(beta_hat.row(i))) << ','
        << fmt(d.X.row(i).dot(beta_ols)) << '\n';
  if (!out) throw IoError("write_fit_lines_csv: write failed");
}

}  // namespace subfuse
