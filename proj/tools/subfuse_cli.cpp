#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "subfuse/csv.hpp"
#include "subfuse/inference.hpp"
#include "subfuse/path.hpp"
#include "subfuse/rng.hpp"
#include "subfuse/sim.hpp"
#include "subfuse/subgroup.hpp"

using json = nlohmann::ordered_json;
using namespace subfuse;

namespace {

struct DataOpts {
  std::string data, response;
  std::vector<std::string> treat, covar;
  bool no_standardize = false;
};

struct FitOpts {
  std::string penalty = "mcp";
  double gamma = 3.0;
  bool gamma_set = false;
  double vartheta = 1.0;
  double tol = 0.0;
  Index max_iter = 5000;
  double eps_fuse = 0.0;
  bool beta_rule = false;
  bool classic_bic = false;
  double lambda_min = 0.0, lambda_max = 0.0;
  Index grid_size = 100;
  bool linear_grid = false;
};

PenaltyKind parse_kind(const std::string& s) {
  if (s == "lasso") return PenaltyKind::lasso;
  if (s == "mcp") return PenaltyKind::mcp;
  if (s == "scad") return PenaltyKind::scad;
  throw CLI::ValidationError("--penalty", "must be lasso, mcp or scad");
}

void add_data_opts(CLI::App* cmd, DataOpts& o) {
  cmd->add_option("--data", o.data, "input CSV (header row required)")->required();
  cmd->add_option("--response", o.response, "response column name")->required();
  cmd->add_option("--treat", o.treat, "treatment column names")
      ->required()
      ->delimiter(',');
  cmd->add_option("--covar", o.covar, "nuisance covariate column names")
      ->delimiter(',');
  cmd->add_flag("--no-standardize", o.no_standardize,
                "fit on the raw columns instead of standardized ones");
}

void add_fit_opts(CLI::App* cmd, FitOpts& o, bool grid) {
  cmd->add_option("--penalty", o.penalty, "lasso | mcp | scad")
      ->check(CLI::IsMember({"lasso", "mcp", "scad"}));
  auto* g = cmd->add_option("--gamma", o.gamma, "concavity parameter");
  cmd->callback([&o, g] { o.gamma_set = g->count() > 0; });
  cmd->add_option("--vartheta", o.vartheta, "ADMM penalty parameter (default 1)");
  cmd->add_option("--tol", o.tol, "stopping tolerance (default scaled)");
  cmd->add_option("--max-iter", o.max_iter, "iteration cap (default 5000)");
  cmd->add_option("--eps-fuse", o.eps_fuse, "fusion threshold (default scale-aware)");
  cmd->add_flag("--beta-rule", o.beta_rule, "group by beta distances, not delta");
  cmd->add_flag("--classic-bic", o.classic_bic, "use C_n = 1");
  if (grid) {
    cmd->add_option("--lambda-min", o.lambda_min, "grid start (default auto)");
    cmd->add_option("--lambda-max", o.lambda_max, "grid end (default auto)");
    cmd->add_option("--grid-size", o.grid_size, "grid points (default 100)");
    cmd->add_flag("--linear-grid", o.linear_grid, "linear instead of log spacing");
  }
}

PathConfig make_path_config(const FitOpts& o) {
  PathConfig cfg;
  cfg.kind = parse_kind(o.penalty);
  cfg.gamma = o.gamma;
  cfg.vartheta = o.vartheta;
  cfg.tol = o.tol;
  cfg.max_iter = o.max_iter;
  cfg.eps_fuse = o.eps_fuse;
  cfg.beta_rule = o.beta_rule;
  cfg.classic_bic = o.classic_bic;
  cfg.grid_size = o.grid_size;
  cfg.grid_spacing = o.linear_grid ? GridSpacing::linear : GridSpacing::log;
  cfg.lambda_min = o.lambda_min;
  cfg.lambda_max = o.lambda_max;
  check_compatible(PenaltySpec{cfg.kind, 0.0, cfg.gamma}, cfg.vartheta);
  return cfg;
}

struct LoadedData {
  Dataset d;
  std::optional<StandardizationInfo> std_info;
};

LoadedData load_data(const DataOpts& o) {
  CsvTable table = read_csv_file(o.data);
  Dataset raw = validate_dataset(
      dataset_from_table(table, o.response, o.treat, o.covar));
  if (o.no_standardize) return {std::move(raw), std::nullopt};
  auto [std_d, info] = standardize(raw);
  return {std::move(std_d), std::move(info)};
}

void fill_lambda_range(PathConfig& cfg, const Dataset& d) {
  if (cfg.lambda_max <= 0.0) {
    cfg.lambda_max = find_full_fusion_lambda(d, cfg);
    std::cerr << "lambda-max not given; doubling search found "
              << cfg.lambda_max << "\n";
  }
  if (cfg.lambda_min <= 0.0) cfg.lambda_min = cfg.lambda_max / 200.0;
}

json result_json(const SubgroupResult& sel, const LoadedData& ld) {
  json j;
  j["lambda"] = sel.lambda_selected;
  j["k_hat"] = sel.partition.K_hat();
  json groups = json::array();
  for (const auto& block : sel.partition.blocks) {
    json b = json::array();
    for (int i : block) b.push_back(i + 1);
    groups.push_back(std::move(b));
  }
  j["groups"] = std::move(groups);
  Vector eta = sel.eta_hat;
  Matrix alpha = sel.alpha_hat;
  if (ld.std_info) std::tie(eta, alpha) = unstandardize(eta, alpha, *ld.std_info);
  json am = json::array();
  for (Index k = 0; k < alpha.rows(); ++k) {
    json row = json::array();
    for (Index c = 0; c < alpha.cols(); ++c) row.push_back(alpha(k, c));
    am.push_back(std::move(row));
  }
  j["alpha_hat"] = std::move(am);
  j["eta_hat"] = std::vector<double>(eta.begin(), eta.end());
  j["bic"] = sel.bic;
  j["standardized"] = bool(ld.std_info);
  return j;
}

json report_json(const InferenceReport& rep) {
  json j;
  j["sigma2_hat"] = rep.sigma2_hat;
  j["asd_eta"] = std::vector<double>(rep.asd_eta.begin(), rep.asd_eta.end());
  j["asd_alpha"] = std::vector<double>(rep.asd_alpha.begin(), rep.asd_alpha.end());
  auto intervals = [](const std::vector<Interval>& v) {
    json a = json::array();
    for (const auto& iv : v) a.push_back({iv.lower, iv.upper});
    return a;
  };
  j["ci_eta"] = intervals(rep.ci_eta);
  j["ci_alpha"] = intervals(rep.ci_alpha);
  j["level"] = rep.level;
  if (rep.f_test_available) {
    j["f_stat"] = rep.f_stat;
    j["dof"] = {rep.dof.first, rep.dof.second};
    j["p_value"] = rep.p_value;
  } else {
    j["f_stat"] = nullptr;
  }
  return j;
}

void write_output(const json& j, const std::string& out_path, bool pretty) {
  std::string text = j.dump(pretty ? 2 : -1) + "\n";
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open output file '" + out_path + "'");
    out << text;
  }
}

void apply_gamma_default(FitOpts& o) {
  // MCP and SCAD both default to gamma = 3; lasso ignores gamma.
  if (!o.gamma_set) o.gamma = 3.0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subgroup treatment-effect estimation by concave pairwise fusion"};
  app.require_subcommand(1);

  DataOpts data_opts;
  FitOpts fit_opts;
  std::string out_path, fusiongram_path;
  bool pretty = false;
  double fit_lambda = 0.0;
  double level = 0.95;

  auto* fit = app.add_subcommand("fit", "solve at a single lambda");
  add_data_opts(fit, data_opts);
  add_fit_opts(fit, fit_opts, false);
  fit->add_option("--lambda", fit_lambda, "penalty tuning parameter")->required();
  fit->add_option("--out", out_path, "output JSON file (default stdout)");
  fit->add_flag("--pretty", pretty, "indented JSON");

  auto* path_cmd = app.add_subcommand("path", "compute the fusiongram path");
  add_data_opts(path_cmd, data_opts);
  add_fit_opts(path_cmd, fit_opts, true);
  path_cmd->add_option("--out", out_path, "path summary JSON (default stdout)");
  path_cmd->add_option("--fusiongram-out", fusiongram_path, "long-format CSV file");
  path_cmd->add_flag("--pretty", pretty, "indented JSON");

  auto* select_cmd = app.add_subcommand("select", "path + BIC model selection");
  add_data_opts(select_cmd, data_opts);
  add_fit_opts(select_cmd, fit_opts, true);
  select_cmd->add_option("--out", out_path, "SubgroupResult JSON (default stdout)");
  select_cmd->add_option("--fusiongram-out", fusiongram_path, "sidecar CSV file");
  select_cmd->add_flag("--pretty", pretty, "indented JSON");

  auto* infer_cmd = app.add_subcommand("infer", "select + post-selection inference");
  add_data_opts(infer_cmd, data_opts);
  add_fit_opts(infer_cmd, fit_opts, true);
  infer_cmd->add_option("--level", level, "confidence level (default 0.95)");
  infer_cmd->add_option("--out", out_path, "report JSON (default stdout)");
  infer_cmd->add_flag("--pretty", pretty, "indented JSON");

  int sim_example = 1;
  Index sim_n = 200, sim_reps = 100, sim_threads = 1;
  double sim_alpha = 2.0;
  std::uint64_t sim_seed = 0;
  std::string ledger_path, lines_path;
  auto* sim_cmd = app.add_subcommand("simulate", "seeded replication study");
  add_fit_opts(sim_cmd, fit_opts, true);
  sim_cmd->add_option("--example", sim_example, "design 1, 2 or 3")
      ->check(CLI::Range(1, 3));
  sim_cmd->add_option("--n", sim_n, "sample size (default 200)");
  sim_cmd->add_option("--alpha", sim_alpha, "effect size of design 2");
  sim_cmd->add_option("--seed", sim_seed, "study seed")->required();
  sim_cmd->add_option("--reps", sim_reps, "replications (default 100)");
  sim_cmd->add_option("--threads", sim_threads, "worker count (default 1)");
  sim_cmd->add_option("--ledger", ledger_path, "per-replication CSV file");
  sim_cmd->add_option("--lines-out", lines_path,
                      "fitted-line CSV for the first replication");
  sim_cmd->add_option("--out", out_path, "summary JSON (default stdout)");
  sim_cmd->add_flag("--pretty", pretty, "indented JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    apply_gamma_default(fit_opts);
    if (fit->parsed()) {
      LoadedData ld = load_data(data_opts);
      PathConfig cfg = make_path_config(fit_opts);
      AdmmWorkspace ws(ld.d, cfg.vartheta);
      double tol = cfg.tol > 0.0 ? cfg.tol : default_tol(ld.d.n, ld.d.p);
      PenaltySpec spec{cfg.kind, fit_lambda, cfg.gamma};
      AdmmState state = solve(ws, ld.d, spec, ridge_initialize(ld.d), tol,
                              cfg.max_iter);
      double eps = cfg.eps_fuse > 0.0 ? cfg.eps_fuse : default_eps_fuse(state.beta);
      Partition part = cfg.beta_rule ? extract_groups_beta(state.beta, eps)
                                     : extract_groups(state.beta, state.delta, eps);
      SubgroupResult sel;
      sel.partition = part;
      sel.alpha_hat = group_estimates(state.beta, part);
      sel.eta_hat = state.eta;
      sel.lambda_selected = fit_lambda;
      sel.bic = partition_bic(ld.d, state.eta, state.beta, part, cfg.classic_bic);
      json j = result_json(sel, ld);
      j["converged"] = state.converged;
      j["iterations"] = state.iter;
      j["primal_norm"] = state.primal_norm;
      j["dual_norm"] = state.dual_norm;
      if (!state.converged)
        std::cerr << "warning: solver did not converge at lambda = " << fit_lambda
                  << "\n";
      write_output(j, out_path, pretty);
    } else if (path_cmd->parsed() || select_cmd->parsed() || infer_cmd->parsed()) {
      LoadedData ld = load_data(data_opts);
      PathConfig cfg = make_path_config(fit_opts);
      fill_lambda_range(cfg, ld.d);
      FusionPath path = compute_path(ld.d, cfg);
      if (!fusiongram_path.empty()) {
        std::ofstream fus(fusiongram_path);
        if (!fus) throw IoError("cannot open '" + fusiongram_path + "'");
        export_fusiongram_csv(path, fus);
      }
      if (path_cmd->parsed()) {
        std::ostringstream ss;
        export_path_summary_json(path, ss);
        write_output(json::parse(ss.str()), out_path, pretty);
      } else {
        SubgroupResult sel = select_model(path);
        if (select_cmd->parsed()) {
          write_output(result_json(sel, ld), out_path, pretty);
        } else {
          InferenceReport rep = infer(ld.d, sel, level);
          json j = result_json(sel, ld);
          j["inference"] = report_json(rep);
          write_output(j, out_path, pretty);
        }
      }
    } else if (sim_cmd->parsed()) {
      StudyConfig cfg;
      cfg.dgp.example = sim_example == 1   ? Example::one
                        : sim_example == 2 ? Example::two
                                           : Example::three;
      cfg.dgp.n = sim_n;
      cfg.dgp.alpha_scale = sim_alpha;
      cfg.dgp.seed = sim_seed;
      cfg.reps = sim_reps;
      cfg.threads = sim_threads;
      cfg.keep_ledger = !ledger_path.empty();
      cfg.path = make_path_config(fit_opts);
      if (cfg.path.lambda_max <= 0.0) {
        DgpSpec probe = cfg.dgp;
        probe.seed = derive_seed(cfg.dgp.seed, 0);
        auto [d0, t0] = generate(probe);
        fill_lambda_range(cfg.path, d0);
      } else if (cfg.path.lambda_min <= 0.0) {
        cfg.path.lambda_min = cfg.path.lambda_max / 200.0;
      }
      StudyResult res = run_study(cfg);
      if (!ledger_path.empty()) {
        std::ofstream led(ledger_path);
        if (!led) throw IoError("cannot open '" + ledger_path + "'");
        write_ledger_csv(res.ledger, led);
      }
      if (!lines_path.empty()) {
        DgpSpec first = cfg.dgp;
        first.seed = derive_seed(cfg.dgp.seed, 0);
        auto [d, truth] = generate(first);
        FusionPath p = compute_path(d, cfg.path);
        SubgroupResult sel = select_model(p);
        Matrix beta(d.n, d.p);
        for (Index k = 0; k < sel.partition.K_hat(); ++k)
          for (int i : sel.partition.blocks[k]) beta.row(i) = sel.alpha_hat.row(k);
        std::ofstream lout(lines_path);
        if (!lout) throw IoError("cannot open '" + lines_path + "'");
        write_fit_lines_csv(d, truth, beta, lout);
      }
      std::ostringstream ss;
      write_summary_json(res.summary, ss);
      write_output(json::parse(ss.str()), out_path, pretty);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
