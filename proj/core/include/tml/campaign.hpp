#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tml/optimizer.hpp"
#include "tml/sign_search.hpp"
#include "tml/types.hpp"

namespace tml {

/// Where the per-probe positive definite conversion runs during the sign
/// search: nowhere (final trim only), in the redistribution stage, or at
/// every probe of both stages.
enum class ProbeTrim { None, SecondStage, AllStages };

struct CampaignConfig {
  int n = 17;
  double w2 = 0.1;
  double sigma2 = 0.01;
  std::vector<int> t_list = {17, 34, 85, 170, 340, 1000};
  int trials = 100;
  std::uint64_t seed0 = 1;

  /// Second-stage (selection) criterion; the first branch stage always runs
  /// on the L2 eigenvalue distance.
  CriterionKind criterion = CriterionKind::Minimax;
  int trim_k = 1;
  ProbeTrim probe_trim = ProbeTrim::None;
  bool use_ascent = false;
  bool optimize_hermitian = false;
  bool check_global = true;

  double theta0 = 0.0;
  double d_over_lambda = 0.45;
  double phi_max = 0.0;  // calibration errors off by default

  int threads = 0;   // 0: TOEPLITZ_ML_THREADS env var, then hardware count
  int report_t = 85; // sample volume the per-figure exports focus on

  OptimizerConfig optimizer;
};

struct TrialRecord {
  int t_count = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double lr_true = 0.0;
  double lr_init = 0.0;
  double lr_opt = 0.0;
  double lr_opt_hermitian = std::numeric_limits<double>::quiet_NaN();
  bool opt_failed = false;
  bool trim_fallback = false;
  int expansion_failures = 0;
  bool excluded = false;
  std::string exclude_reason;  // empty when included
  bool global_ok = false;
  double score_l2 = 0.0;
  double score_minimax = 0.0;
  double score_rho = 0.0;
  int k_noise = 0;
  int opt_iters = 0;
};

/// One row of the per-branch score table (the structure of the published
/// branch tables: every criterion evaluated on each branch's solution).
struct BranchRow {
  int branch_id = 0;
  double l2 = 0.0;
  double minimax = 0.0;
  double rho = std::numeric_limits<double>::quiet_NaN();
  double lr = std::numeric_limits<double>::quiet_NaN();
  bool pd = false;
};

/// Extra per-trial artifacts kept only for the focus trial of a campaign.
struct TrialExtras {
  std::vector<TracePoint> trace;
  std::vector<BranchRow> branch_rows;
};

/// Score every branch result under all reportable criteria.
std::vector<BranchRow> make_branch_rows(const std::vector<SearchResult>& results,
                                        const Vector& target_eigs, const SnapshotSet* snapshots,
                                        const Matrix* rhat);

struct TSummary {
  int t_count = 0;
  int trials = 0;
  int failures = 0;
  double failure_pct = 0.0;
  double mean_lr_opt = 0.0, min_lr_opt = 0.0, max_lr_opt = 0.0, sd_lr_opt = 0.0;
  double mean_lr_true = 0.0, lr_true_q10 = 0.0, lr_true_q90 = 0.0;
  double mean_delta = 0.0;  // mean(lr_opt - lr_true) over included trials
  double mean_lr_opt_herm = std::numeric_limits<double>::quiet_NaN();
  double mean_delta_herm = std::numeric_limits<double>::quiet_NaN();
};

struct CampaignSummary {
  std::vector<TSummary> per_t;
};

struct CampaignResult {
  std::vector<TrialRecord> records;
  CampaignSummary summary;
  TrialExtras focus;
};

/// Deterministic per-trial seed: seed0 + hash of (T, trial index).
std::uint64_t trial_seed(std::uint64_t seed0, int t_count, int trial_idx);

/// End-to-end pipeline for one trial: snapshots -> sample covariance ->
/// moduli/order/RMT -> branch search -> redistribution -> p.d. trim ->
/// optional whitened equalization -> LR maximization (+ optional Hermitian
/// pass) -> global-extremum check. Component failures set status flags and
/// never abort.
TrialRecord run_trial(const CampaignConfig& cfg, int t_count, int trial_idx,
                      TrialExtras* extras = nullptr);

/// Full campaign over cfg.t_list. Writes trials.csv under outdir
/// incrementally (one flush per sample volume) when outdir is non-empty;
/// parallel and serial runs produce identical bytes.
CampaignResult run_campaign(const CampaignConfig& cfg, const std::filesystem::path& outdir = {});

CampaignSummary summarize(const std::vector<TrialRecord>& records);

/// Writes summary.json plus the per-figure plot data files:
/// fig8_failures.csv, fig9_trace.csv, fig11_sorted.csv, fig13_histogram.csv,
/// fig14_20_aggregates.csv, tables_branch.csv (and trials.csv when absent).
void emit_report(const std::vector<TrialRecord>& records, const CampaignSummary& summary,
                 const TrialExtras& focus, const CampaignConfig& cfg,
                 const std::filesystem::path& outdir);

void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_trials_csv(const std::filesystem::path& path);
std::string trial_csv_header();
std::string trial_csv_row(const TrialRecord& r);

/// Mean achieved LR per selection criterion, all run through the
/// probe-trimmed two-stage pipeline at the given sample volume.
struct CriterionComparison {
  double mean_lr_log_lr = 0.0;
  double mean_lr_l2 = 0.0;
  double mean_lr_minimax = 0.0;
  double mean_lr_rho = 0.0;
  int trials = 0;
};

CriterionComparison compare_criteria(const CampaignConfig& cfg, int t_count);

int resolve_threads(int requested);

}  // namespace tml
