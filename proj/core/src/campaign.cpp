#include "tml/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tml/ascent.hpp"
#include "tml/io.hpp"
#include "tml/matrix_core.hpp"
#include "tml/spectrum.hpp"
#include "tml/trim.hpp"

namespace tml {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void parallel_for(int n_items, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n_items <= 1) {
    for (int i = 0; i < n_items; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(threads, n_items);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n_items; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

// R-7 linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> v, double q) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

CriterionSpec make_criterion(CriterionKind kind, const Vector& target, const SnapshotSet& snaps,
                             const Matrix& rhat) {
  CriterionSpec c;
  switch (kind) {
    case CriterionKind::L2: c = CriterionSpec::l2(target); break;
    case CriterionKind::Minimax: c = CriterionSpec::minimax(target); break;
    case CriterionKind::Rho: c = CriterionSpec::rho(snaps); break;
    case CriterionKind::LogLR: c = CriterionSpec::log_lr(rhat); break;
  }
  if (!c.rhat) c.rhat = &rhat;  // for LR reporting on results
  return c;
}

// Selection order among redistributed branch results.
bool result_better(const SearchResult& a, const SearchResult& b) {
  if (a.score != b.score) return a.score < b.score;
  if (a.degraded != b.degraded) return !a.degraded;
  return a.pattern < b.pattern;
}

}  // namespace

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TOEPLITZ_ML_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::uint64_t trial_seed(std::uint64_t seed0, int t_count, int trial_idx) {
  const std::uint64_t key =
      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t_count)) << 32) |
      static_cast<std::uint32_t>(trial_idx);
  return seed0 + SplitMix64::mix(key);
}

std::vector<BranchRow> make_branch_rows(const std::vector<SearchResult>& results,
                                        const Vector& target_eigs, const SnapshotSet* snapshots,
                                        const Matrix* rhat) {
  std::vector<BranchRow> rows;
  rows.reserve(results.size());
  std::optional<CriterionSpec> rho_spec;
  if (snapshots) rho_spec = CriterionSpec::rho(*snapshots);
  for (const SearchResult& r : results) {
    BranchRow row;
    row.branch_id = r.branch_id;
    const Vector eigs = eigvals_lags(r.matrix);
    row.pd = eigs(eigs.size() - 1) > 0.0;
    row.l2 = (eigs - target_eigs).squaredNorm();
    double mm = 0.0;
    for (int j = 0; j < target_eigs.size(); ++j)
      mm = std::max(mm, std::abs(eigs(j) - target_eigs(j)) / std::abs(target_eigs(j)));
    row.minimax = mm;
    if (rho_spec && row.pd) {
      try {
        row.rho = eval_criterion(r.matrix, *rho_spec);
      } catch (const std::domain_error&) {
      }
    }
    if (rhat && row.pd) row.lr = likelihood_ratio(*rhat, r.matrix);
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(),
            [](const BranchRow& a, const BranchRow& b) { return a.branch_id < b.branch_id; });
  return rows;
}

TrialRecord run_trial(const CampaignConfig& cfg, int t_count, int trial_idx,
                      TrialExtras* extras) {
  TrialRecord rec;
  rec.t_count = t_count;
  rec.trial = trial_idx;
  rec.seed = trial_seed(cfg.seed0, t_count, trial_idx);
  rec.lr_true = kNaN;
  rec.lr_init = kNaN;
  rec.lr_opt = kNaN;

  const SymToeplitz t_true = build_sinc_model(cfg.n, cfg.w2, cfg.sigma2);

  PhaseVector phase = PhaseVector::steering(cfg.n, cfg.theta0, cfg.d_over_lambda);
  if (cfg.phi_max > 0.0) {
    SplitMix64 phase_rng(SplitMix64::mix(rec.seed ^ 0xCA11B5EEDULL));
    phase = phase.composed_with(random_calibration_errors(cfg.n, cfg.phi_max, phase_rng));
  }

  const SnapshotSet snaps = generate_snapshots(t_true, t_count, phase, rec.seed);
  const Matrix rhat = sample_covariance(snaps);
  rec.lr_true = likelihood_ratio(rhat, t_true);

  try {
    const ModuliVector moduli = redundancy_moduli(rhat);
    const EigenSystem es = eigh(rhat);
    const OrderSelection order = select_order(es.values, t_count, OrderMethod::MDL);
    rec.k_noise = order.k_noise;
    const CorrectedSpectrum corr = rmt_correct(es.values, t_count, order.k_noise);

    const TrimConfig trim_cfg =
        TrimConfig::defaults(moduli.moduli(0), corr.noise_value, cfg.trim_k);
    const TrimPolicy policy{trim_cfg};

    // Stage one: branch search on the L2 eigenvalue distance.
    const CriterionSpec c1 = make_criterion(CriterionKind::L2, corr.values, snaps, rhat);
    const TrimPolicy* stage1_trim = cfg.probe_trim == ProbeTrim::AllStages ? &policy : nullptr;
    std::vector<SearchResult> branches = dp_branch_search(moduli, c1, stage1_trim);

    // Stage two: redistribution within every branch under the selection
    // criterion, then pick the best branch.
    const CriterionSpec c2 = make_criterion(cfg.criterion, corr.values, snaps, rhat);
    const TrimPolicy* stage2_trim = cfg.probe_trim != ProbeTrim::None ? &policy : nullptr;
    std::vector<SearchResult> finals;
    finals.reserve(branches.size());
    for (const SearchResult& b : branches)
      finals.push_back(redistribute(b, moduli, c2, stage2_trim));

    const SearchResult* best = &finals.front();
    for (const SearchResult& r : finals)
      if (result_better(r, *best)) best = &r;

    if (extras) extras->branch_rows = make_branch_rows(finals, corr.values, &snaps, &rhat);

    // Positive definite initial solution.
    SymToeplitz t_init = best->matrix;
    if (stage2_trim) {
      rec.trim_fallback = best->degraded;
    } else {
      const SymToeplitz raw = compose(moduli, best->pattern);
      const TrimReport rep =
          cfg.trim_k > 1 ? trim_multi(raw, trim_cfg) : trim_single(raw, trim_cfg);
      t_init = rep.matrix;
      rec.trim_fallback = rep.fallback_used;
      rec.expansion_failures = rep.expansion_failures;
      if (rep.coalesced) {
        rec.excluded = true;
        rec.exclude_reason = "trim_coalescence";
      }
    }

    if (cfg.use_ascent)
      t_init = equalize(t_init, rhat, AscentConfig::defaults(t_init.t0()));

    rec.lr_init = likelihood_ratio(rhat, t_init);
    {
      const Vector eigs = eigvals_lags(t_init);
      rec.score_l2 = (eigs - corr.values).squaredNorm();
      double mm = 0.0;
      for (int j = 0; j < corr.values.size(); ++j)
        mm = std::max(mm, std::abs(eigs(j) - corr.values(j)) / corr.values(j));
      rec.score_minimax = mm;
      try {
        rec.score_rho = eval_criterion(t_init, CriterionSpec::rho(snaps));
      } catch (const std::domain_error&) {
        rec.score_rho = kNaN;
      }
    }

    const OptimizeOutcome opt = maximize_lr(rhat, t_init, cfg.optimizer);
    rec.lr_opt = opt.lr;
    rec.opt_iters = opt.iters;
    rec.opt_failed = opt.status == OptimizeStatus::NonPositiveDefiniteExit;
    if (rec.opt_failed && !rec.excluded) {
      rec.excluded = true;
      rec.exclude_reason = "optimizer_nonpd";
    }
    if (extras) extras->trace = opt.trace;

    if (cfg.optimize_hermitian && !rec.opt_failed) {
      const OptimizeOutcome opt_h =
          maximize_lr_hermitian(rhat, opt.real_matrix(), cfg.optimizer);
      if (opt_h.status != OptimizeStatus::NonPositiveDefiniteExit)
        rec.lr_opt_hermitian = opt_h.lr;
    }

    if (cfg.check_global && !rec.opt_failed)
      rec.global_ok = is_global(opt, rhat, t_true, cfg.optimizer);
  } catch (const std::exception& e) {
    rec.excluded = true;
    rec.exclude_reason = sanitize(std::string("error:") + e.what());
  }
  return rec;
}

std::string trial_csv_header() {
  return "T,trial,seed,lr_true,lr_init,lr_opt,lr_opt_hermitian,opt_failed,trim_fallback,"
         "expansion_failures,excluded,exclude_reason,global_ok,score_l2,score_minimax,"
         "score_rho,k_noise,opt_iters";
}

std::string trial_csv_row(const TrialRecord& r) {
  std::ostringstream os;
  os << r.t_count << ',' << r.trial << ',' << r.seed << ',' << format_double(r.lr_true) << ','
     << format_double(r.lr_init) << ',' << format_double(r.lr_opt) << ','
     << format_double(r.lr_opt_hermitian) << ',' << int(r.opt_failed) << ','
     << int(r.trim_fallback) << ',' << r.expansion_failures << ',' << int(r.excluded) << ','
     << sanitize(r.exclude_reason) << ',' << int(r.global_ok) << ','
     << format_double(r.score_l2) << ',' << format_double(r.score_minimax) << ','
     << format_double(r.score_rho) << ',' << r.k_noise << ',' << r.opt_iters;
  return os.str();
}

void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << trial_csv_header() << '\n';
  for (const TrialRecord& r : records) f << trial_csv_row(r) << '\n';
}

std::vector<TrialRecord> read_trials_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != trial_csv_header())
    throw std::runtime_error("read_trials_csv: unexpected header in " + path.string());
  std::vector<TrialRecord> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> tok;
    std::stringstream ss(line);
    std::string cur;
    while (std::getline(ss, cur, ',')) tok.push_back(cur);
    if (tok.size() != 18) throw std::runtime_error("read_trials_csv: bad row: " + line);
    TrialRecord r;
    r.t_count = std::stoi(tok[0]);
    r.trial = std::stoi(tok[1]);
    r.seed = std::strtoull(tok[2].c_str(), nullptr, 10);
    r.lr_true = std::strtod(tok[3].c_str(), nullptr);
    r.lr_init = std::strtod(tok[4].c_str(), nullptr);
    r.lr_opt = std::strtod(tok[5].c_str(), nullptr);
    r.lr_opt_hermitian = std::strtod(tok[6].c_str(), nullptr);
    r.opt_failed = tok[7] == "1";
    r.trim_fallback = tok[8] == "1";
    r.expansion_failures = std::stoi(tok[9]);
    r.excluded = tok[10] == "1";
    r.exclude_reason = tok[11];
    r.global_ok = tok[12] == "1";
    r.score_l2 = std::strtod(tok[13].c_str(), nullptr);
    r.score_minimax = std::strtod(tok[14].c_str(), nullptr);
    r.score_rho = std::strtod(tok[15].c_str(), nullptr);
    r.k_noise = std::stoi(tok[16]);
    r.opt_iters = std::stoi(tok[17]);
    out.push_back(std::move(r));
  }
  return out;
}

CampaignSummary summarize(const std::vector<TrialRecord>& records) {
  // Preserve first-appearance order of sample volumes.
  std::vector<int> t_order;
  for (const TrialRecord& r : records)
    if (std::find(t_order.begin(), t_order.end(), r.t_count) == t_order.end())
      t_order.push_back(r.t_count);

  CampaignSummary summary;
  for (int t : t_order) {
    TSummary s;
    s.t_count = t;
    std::vector<double> lr_opt, lr_true_all, deltas, lr_herm, deltas_herm;
    for (const TrialRecord& r : records) {
      if (r.t_count != t) continue;
      ++s.trials;
      if (r.opt_failed) ++s.failures;
      if (std::isfinite(r.lr_true)) lr_true_all.push_back(r.lr_true);
      if (r.excluded) continue;
      if (std::isfinite(r.lr_opt)) {
        lr_opt.push_back(r.lr_opt);
        deltas.push_back(r.lr_opt - r.lr_true);
      }
      if (std::isfinite(r.lr_opt_hermitian)) {
        lr_herm.push_back(r.lr_opt_hermitian);
        deltas_herm.push_back(r.lr_opt_hermitian - r.lr_true);
      }
    }
    s.failure_pct = s.trials ? 100.0 * s.failures / s.trials : 0.0;
    auto mean = [](const std::vector<double>& v) {
      if (v.empty()) return kNaN;
      double acc = 0.0;
      for (double x : v) acc += x;
      return acc / v.size();
    };
    s.mean_lr_opt = mean(lr_opt);
    s.min_lr_opt = lr_opt.empty() ? kNaN : *std::min_element(lr_opt.begin(), lr_opt.end());
    s.max_lr_opt = lr_opt.empty() ? kNaN : *std::max_element(lr_opt.begin(), lr_opt.end());
    if (lr_opt.size() > 1) {
      double acc = 0.0;
      for (double x : lr_opt) acc += (x - s.mean_lr_opt) * (x - s.mean_lr_opt);
      s.sd_lr_opt = std::sqrt(acc / (lr_opt.size() - 1));
    }
    s.mean_lr_true = mean(lr_true_all);
    s.lr_true_q10 = quantile(lr_true_all, 0.1);
    s.lr_true_q90 = quantile(lr_true_all, 0.9);
    s.mean_delta = mean(deltas);
    s.mean_lr_opt_herm = mean(lr_herm);
    s.mean_delta_herm = mean(deltas_herm);
    summary.per_t.push_back(s);
  }
  return summary;
}

CampaignResult run_campaign(const CampaignConfig& cfg, const std::filesystem::path& outdir) {
  CampaignResult result;
  const int threads = resolve_threads(cfg.threads);

  std::ofstream csv;
  if (!outdir.empty()) {
    std::filesystem::create_directories(outdir);
    csv.open(outdir / "trials.csv");
    if (!csv) throw std::runtime_error("cannot open trials.csv under " + outdir.string());
    csv << trial_csv_header() << '\n';
  }

  int focus_t = cfg.t_list.empty() ? 0 : cfg.t_list.front();
  for (int t : cfg.t_list)
    if (t == cfg.report_t) focus_t = t;

  for (int t : cfg.t_list) {
    std::vector<std::optional<TrialRecord>> block(cfg.trials);
    std::vector<TrialExtras> extras_slot(cfg.trials);
    const bool want_extras = (t == focus_t);
    parallel_for(cfg.trials, threads, [&](int i) {
      TrialExtras* ex = (want_extras && i == 0) ? &extras_slot[0] : nullptr;
      block[i] = run_trial(cfg, t, i, ex);
    });
    for (int i = 0; i < cfg.trials; ++i) {
      result.records.push_back(std::move(*block[i]));
      if (csv.is_open()) csv << trial_csv_row(result.records.back()) << '\n';
    }
    if (want_extras) result.focus = std::move(extras_slot[0]);
    if (csv.is_open()) csv.flush();
  }

  result.summary = summarize(result.records);
  return result;
}

namespace {

std::ofstream open_report_file(const std::filesystem::path& outdir, const char* name) {
  std::ofstream f(outdir / name);
  if (!f) throw std::runtime_error(std::string("cannot open report file ") + name);
  return f;
}

nlohmann::ordered_json summary_json(const CampaignSummary& summary) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const TSummary& s : summary.per_t) {
    nlohmann::ordered_json j;
    j["T"] = s.t_count;
    j["trials"] = s.trials;
    j["failures"] = s.failures;
    j["failure_pct"] = num(s.failure_pct);
    j["mean_lr_opt"] = num(s.mean_lr_opt);
    j["min_lr_opt"] = num(s.min_lr_opt);
    j["max_lr_opt"] = num(s.max_lr_opt);
    j["sd_lr_opt"] = num(s.sd_lr_opt);
    j["mean_plus_3sd"] = num(s.mean_lr_opt + 3.0 * s.sd_lr_opt);
    j["mean_minus_3sd"] = num(s.mean_lr_opt - 3.0 * s.sd_lr_opt);
    j["mean_lr_true"] = num(s.mean_lr_true);
    j["lr_true_q10"] = num(s.lr_true_q10);
    j["lr_true_q90"] = num(s.lr_true_q90);
    j["mean_delta_lr"] = num(s.mean_delta);
    j["mean_lr_opt_hermitian"] = num(s.mean_lr_opt_herm);
    j["mean_delta_lr_hermitian"] = num(s.mean_delta_herm);
    arr.push_back(std::move(j));
  }
  return nlohmann::ordered_json{{"per_T", std::move(arr)}};
}

}  // namespace

void emit_report(const std::vector<TrialRecord>& records, const CampaignSummary& summary,
                 const TrialExtras& focus, const CampaignConfig& cfg,
                 const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);

  write_trials_csv(outdir / "trials.csv", records);

  {
    std::ofstream f = open_report_file(outdir, "summary.json");
    f << summary_json(summary).dump(2) << '\n';
  }

  {
    std::ofstream f = open_report_file(outdir, "fig8_failures.csv");
    f << "T,trials,failures,failure_pct\n";
    for (const TSummary& s : summary.per_t)
      f << s.t_count << ',' << s.trials << ',' << s.failures << ','
        << format_double(s.failure_pct) << '\n';
  }

  {
    std::ofstream f = open_report_file(outdir, "fig9_trace.csv");
    f << "iter,lr,min_eig\n";
    for (const TracePoint& p : focus.trace)
      f << p.iter << ',' << format_double(p.lr) << ',' << format_double(p.min_eig) << '\n';
  }

  int focus_t = cfg.t_list.empty() ? cfg.report_t : cfg.t_list.front();
  for (int t : cfg.t_list)
    if (t == cfg.report_t) focus_t = t;

  std::vector<const TrialRecord*> focus_recs;
  for (const TrialRecord& r : records)
    if (r.t_count == focus_t && !r.excluded && std::isfinite(r.lr_opt))
      focus_recs.push_back(&r);

  {
    std::ofstream f = open_report_file(outdir, "fig11_sorted.csv");
    f << "rank,lr_opt,lr_true,lr_init\n";
    std::vector<const TrialRecord*> sorted = focus_recs;
    std::sort(sorted.begin(), sorted.end(), [](const TrialRecord* a, const TrialRecord* b) {
      if (a->lr_opt != b->lr_opt) return a->lr_opt > b->lr_opt;
      return a->trial < b->trial;
    });
    int rank = 1;
    for (const TrialRecord* r : sorted)
      f << rank++ << ',' << format_double(r->lr_opt) << ',' << format_double(r->lr_true) << ','
        << format_double(r->lr_init) << '\n';
  }

  {
    std::ofstream f = open_report_file(outdir, "fig13_histogram.csv");
    f << "bin_lo,bin_hi,count\n";
    std::vector<double> deltas;
    for (const TrialRecord* r : focus_recs) deltas.push_back(r->lr_opt - r->lr_true);
    if (!deltas.empty()) {
      constexpr int kBins = 30;
      const double lo = *std::min_element(deltas.begin(), deltas.end());
      double hi = *std::max_element(deltas.begin(), deltas.end());
      if (hi <= lo) hi = lo + 1e-12;
      const double width = (hi - lo) / kBins;
      std::vector<long> counts(kBins, 0);
      for (double d : deltas) {
        int b = static_cast<int>((d - lo) / width);
        if (b >= kBins) b = kBins - 1;
        if (b < 0) b = 0;
        ++counts[b];
      }
      for (int b = 0; b < kBins; ++b)
        f << format_double(lo + b * width) << ',' << format_double(lo + (b + 1) * width) << ','
          << counts[b] << '\n';
    }
  }

  {
    std::ofstream f = open_report_file(outdir, "fig14_20_aggregates.csv");
    f << "T,trials,failures,failure_pct,mean_lr_opt,min_lr_opt,max_lr_opt,sd_lr_opt,"
         "mean_plus_3sd,mean_minus_3sd,mean_lr_true,lr_true_q10,lr_true_q90,mean_delta_lr,"
         "mean_lr_opt_hermitian,mean_delta_lr_hermitian\n";
    for (const TSummary& s : summary.per_t)
      f << s.t_count << ',' << s.trials << ',' << s.failures << ','
        << format_double(s.failure_pct) << ',' << format_double(s.mean_lr_opt) << ','
        << format_double(s.min_lr_opt) << ',' << format_double(s.max_lr_opt) << ','
        << format_double(s.sd_lr_opt) << ',' << format_double(s.mean_lr_opt + 3 * s.sd_lr_opt)
        << ',' << format_double(s.mean_lr_opt - 3 * s.sd_lr_opt) << ','
        << format_double(s.mean_lr_true) << ',' << format_double(s.lr_true_q10) << ','
        << format_double(s.lr_true_q90) << ',' << format_double(s.mean_delta) << ','
        << format_double(s.mean_lr_opt_herm) << ',' << format_double(s.mean_delta_herm) << '\n';
  }

  {
    std::ofstream f = open_report_file(outdir, "tables_branch.csv");
    f << "branch_id,l2,minimax,rho,lr,pd\n";
    for (const BranchRow& row : focus.branch_rows)
      f << row.branch_id << ',' << format_double(row.l2) << ',' << format_double(row.minimax)
        << ',' << format_double(row.rho) << ',' << format_double(row.lr) << ',' << int(row.pd)
        << '\n';
  }
}

CriterionComparison compare_criteria(const CampaignConfig& cfg, int t_count) {
  const int threads = resolve_threads(cfg.threads);
  const SymToeplitz t_true = build_sinc_model(cfg.n, cfg.w2, cfg.sigma2);

  struct PerTrial {
    double lr[4] = {kNaN, kNaN, kNaN, kNaN};
  };
  std::vector<PerTrial> rows(cfg.trials);
  const CriterionKind kinds[4] = {CriterionKind::LogLR, CriterionKind::L2,
                                  CriterionKind::Minimax, CriterionKind::Rho};

  parallel_for(cfg.trials, threads, [&](int i) {
    const std::uint64_t seed = trial_seed(cfg.seed0, t_count, i);
    const SnapshotSet snaps =
        generate_snapshots(t_true, t_count, PhaseVector::zero(cfg.n), seed);
    const Matrix rhat = sample_covariance(snaps);
    const ModuliVector moduli = redundancy_moduli(rhat);
    const EigenSystem es = eigh(rhat);
    const OrderSelection order = select_order(es.values, t_count, OrderMethod::MDL);
    const CorrectedSpectrum corr = rmt_correct(es.values, t_count, order.k_noise);
    const TrimConfig trim_cfg = TrimConfig::defaults(moduli.moduli(0), corr.noise_value, 1);
    const TrimPolicy policy{trim_cfg};

    for (int k = 0; k < 4; ++k) {
      const CriterionSpec c = make_criterion(kinds[k], corr.values, snaps, rhat);
      const std::vector<SearchResult> branches = dp_branch_search(moduli, c, &policy);
      std::optional<SearchResult> best;
      for (const SearchResult& b : branches) {
        SearchResult r = redistribute(b, moduli, c, &policy);
        if (!best || result_better(r, *best)) best = std::move(r);
      }
      if (best && best->pd) rows[i].lr[k] = likelihood_ratio(rhat, best->matrix);
    }
  });

  CriterionComparison cmp;
  cmp.trials = cfg.trials;
  double acc[4] = {0, 0, 0, 0};
  int cnt[4] = {0, 0, 0, 0};
  for (const PerTrial& r : rows)
    for (int k = 0; k < 4; ++k)
      if (std::isfinite(r.lr[k])) {
        acc[k] += r.lr[k];
        ++cnt[k];
      }
  cmp.mean_lr_log_lr = cnt[0] ? acc[0] / cnt[0] : kNaN;
  cmp.mean_lr_l2 = cnt[1] ? acc[1] / cnt[1] : kNaN;
  cmp.mean_lr_minimax = cnt[2] ? acc[2] / cnt[2] : kNaN;
  cmp.mean_lr_rho = cnt[3] ? acc[3] / cnt[3] : kNaN;
  return cmp;
}

}  // namespace tml
