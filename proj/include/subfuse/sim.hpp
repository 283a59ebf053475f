#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "subfuse/dataset.hpp"
#include "subfuse/path.hpp"
#include "subfuse/types.hpp"

namespace subfuse {

enum class Example { one, two, three };

struct DgpSpec {
  Example example = Example::one;
  Index n = 200;
  double alpha_scale = 2.0;  // the alpha level of the second example
  std::uint64_t seed = 0;
};

// Per-true-group replication statistics for the treatment effects.
struct GroupStats {
  double mean = 0.0;
  double median = 0.0;
  double asd = 0.0;          // average asymptotic SD over correct-K reps
  double esd = 0.0;          // empirical SD of the estimate across reps
  double oracle_mean = 0.0;  // least squares on the true partition
};

struct ReplicationSummary {
  Index reps = 0;
  Index failures = 0;
  double k_hat_mean = 0.0;
  double k_hat_median = 0.0;
  double k_hat_sd = 0.0;
  double pct_correct_k = 0.0;
  std::vector<GroupStats> alpha_stats;  // per true group, first coordinate
  std::vector<double> eta_mse_distribution;
  double p_value_mean = 1.0;
  double p_value_median = 1.0;
  Index p_value_count = 0;
};

struct StudyConfig {
  DgpSpec dgp;
  Index reps = 100;
  PathConfig path;
  Index threads = 1;
  bool keep_ledger = false;
};

struct ReplicationRecord {
  Index rep = 0;
  std::uint64_t seed = 0;
  Index k_hat = 0;
  double lambda = 0.0;
  double bic = 0.0;
  Index k_true = 0;
  std::vector<double> alpha_hat;     // per true group, first coordinate
  std::vector<double> alpha_oracle;  // per true group, first coordinate
  std::vector<double> asd;           // filled when k_hat == k_true
  double eta_mse = 0.0;
  double p_value = -1.0;             // -1 when no test was possible
  bool failed = false;
};

struct StudyResult {
  ReplicationSummary summary;
  std::vector<ReplicationRecord> ledger;  // filled when keep_ledger
};

// Draws one dataset per the requested design; fully determined by the seed.
std::pair<Dataset, TrueModel> generate(const DgpSpec& spec);

// Oracle least squares (eta, alpha) on the true partition.
std::pair<Vector, Matrix> oracle_fit(const Dataset& d, const TrueModel& truth);

// generate -> compute_path -> select_model -> inference per replication.
// Per-rep seeds derive from (spec.seed, rep); the summary does not depend
// on thread count or completion order.
StudyResult run_study(const StudyConfig& cfg);

void write_summary_json(const ReplicationSummary& s, std::ostream& out);
void write_ledger_csv(const std::vector<ReplicationRecord>& ledger, std::ostream& out);

// Per-subject fitted-line data: x_i beta_i (truth), x_i beta_hat_i and
// x_i beta_ols, for the first treatment covariate.
void write_fit_lines_csv(const Dataset& d, const TrueModel& truth,
                         const Matrix& beta_hat, std::ostream& out);

}  // namespace subfuse
