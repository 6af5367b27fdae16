#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "isg/classic.hpp"
#include "isg/model.hpp"
#include "isg/stats.hpp"

namespace isg {

// One algorithm entry of an experiment, with its tuning knobs. Unused
// knobs are ignored by the dispatcher.
struct AlgoConfig {
  std::string name;  // bl mf bp trw gs nr mw_er mw_er_cf mw_sr mw_sr_cf fp_ce fp_msne
  long iters = 0;    // 0 = per-algorithm stock default
  double tol = -1.0;
  double damping = -1.0;
  double rho = -1.0;
  double burn_in = -1.0;
  double eta = -1.0;
  int m = 0;
};

struct CellConfig {
  std::string model_class;  // mixed | attractive | sign
  double w = 0.0;
  double q = 0.0;  // sign class only
  int samples = 0; // 0 = config default
};

struct ExperimentConfig {
  int d = 8;
  int default_samples = 5;
  std::vector<CellConfig> cells;
  std::vector<AlgoConfig> algos;
  std::uint64_t master_seed = 0;
  std::string out;
  std::string reference = "exact";  // exact | gs
  long ref_iters = 100000;          // gs reference sweeps
  double ref_burn_in = 0.1;
  std::string model_dir;  // when set, models are loaded, cells ignored
  bool record_runtime = false;
};

// Declarative key/value format with comma-separated lists; see the
// checked-in configs under configs/.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

struct RunRecord {
  std::string model_id;
  int d = 0;
  std::string model_class;
  double w = 0.0;
  double q = 0.0;
  std::string algorithm;
  std::uint64_t seed = 0;
  long iterations = 0;
  bool converged = true;
  double avg_marginal_error = 0.0;
  double runtime_ms = 0.0;
};

// CSV with a fixed header, rows sorted by (model_id, algorithm), reals
// at 17 significant digits.
void write_csv(const std::vector<RunRecord>& records, const std::string& path);
std::vector<RunRecord> read_csv(const std::string& path);
std::string records_to_csv(const std::vector<RunRecord>& records);

// Runs every (cell, sample, algorithm) job: generates (or loads) the
// model, computes the reference marginals once per model, runs each
// algorithm, and returns sorted records. Jobs run on `jobs` threads;
// the job -> seed mapping depends only on (config, master seed), so
// parallelism never changes results. If `out` exists its rows are
// reused and only missing jobs run.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config, int jobs = 1,
                                      std::ostream* progress = nullptr);

// Dispatches one algorithm by name on a model; used by run_experiment
// and by the infer CLI so both agree on defaults.
Marginals run_algorithm(const IsingModel& model, const AlgoConfig& algo, std::uint64_t seed);

Proportion nonconvergence_proportion(const std::vector<RunRecord>& records,
                                     const std::string& algorithm,
                                     std::optional<double> q = std::nullopt);

// Per-cell summary tables plus pairwise significance calls, matching
// the evaluation protocol (paired z within a cell, stratified z when
// pooling over q, bootstrap CIs for small cells).
std::string summarize_records(const std::vector<RunRecord>& records, double alpha = 0.05,
                              std::uint64_t bootstrap_seed = 0);

}  // namespace isg
