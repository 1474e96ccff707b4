#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vrem/algorithms.hpp"
#include "vrem/data.hpp"
#include "vrem/init.hpp"
#include "vrem/model.hpp"
#include "vrem/sampler.hpp"
#include "vrem/trace.hpp"

namespace vrem {

inline constexpr const char* kLibraryVersion = "0.1.0";

enum class ModelKind { kScalar2, kGmm };

struct DataSpec {
  // "scalar-mixture", "multivariate-mixture", "image-like", or "file"
  std::string source = "scalar-mixture";
  std::string path;
  std::string format;  // empty: from the file extension
  bool header = false;

  std::size_t n = 1000;
  std::vector<double> weights = {0.2, 0.8};
  std::vector<double> means = {0.5, -0.5};
  double variance = 1.0;
  std::size_t g = 12;
  std::size_t p = 20;
  double separation = 6.0;
  std::size_t d = 784;
  std::size_t zero_columns = 67;
  std::size_t latent = 20;
  std::uint64_t seed = 1;

  bool remove_constant = false;
  std::size_t pca = 0;  // 0: no projection
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string output = "out";

  ModelKind model = ModelKind::kScalar2;
  std::size_t g = 2;
  std::size_t p = 0;  // 0: data width
  double scalar_weight1 = 0.2;

  DataSpec data;

  std::vector<Algorithm> algorithms = {Algorithm::kSpiderEm};
  std::size_t b = 0;
  std::uint64_t k_in = 0;
  std::uint64_t k_out = 0;
  std::uint64_t k_max = 0;
  std::uint64_t epochs = 0;  // alternative budget; derives k_max / k_out / k_in
  std::string step = "constant:0.01";
  std::map<Algorithm, std::string> step_override;
  SamplingMode sampling = SamplingMode::kWithReplacement;
  std::vector<std::uint64_t> seeds = {1};
  double epsilon = 0.0;  // 0: no early stop
  std::uint64_t warm_epochs = 0;
  std::string warm_step;  // empty: step
  MetricCadence cadence = MetricCadence::kEpoch;
  InitMethod init = InitMethod::kRandomResponsibility;
  std::uint64_t init_seed = 1;
  bool snapshots = false;
  double max_diverged_fraction = 0.0;
};

// Flat "key = value" text with [section] headers and '#' comments.
// Sections: top level (name, output), [model], [data], [run].
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Throws ConfigError naming the offending field.
void validate_config(const ExperimentConfig& cfg);
// Canonical text of every field; the manifest hash is taken over it.
std::string canonical_config(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::uint64_t fnv1a64(const std::string& bytes);

// Integer from EM_SEED_OFFSET, 0 when unset.
std::int64_t seed_offset_from_env();
// Adds `offset` to the run, data and init seeds.
void apply_seed_offset(ExperimentConfig& cfg, std::int64_t offset);

struct PreparedProblem {
  RawDataset raw;
  std::shared_ptr<const Dataset> data;
  std::shared_ptr<const Model> model;
  StatVector s_init;
};
RawDataset build_raw_data(const DataSpec& spec);
PreparedProblem prepare_problem(const ExperimentConfig& cfg);

// Per-algorithm budget implied by the config.
struct RunPlan {
  Algorithm algorithm;
  std::uint64_t k_max = 0;
  std::uint64_t k_out = 0;
  std::uint64_t k_in = 0;
  std::uint64_t warm_epochs = 0;
  std::string step;
};
RunPlan plan_run(const ExperimentConfig& cfg, Algorithm algo, std::size_t n);

// One (algorithm, seed) run on a prepared problem. Minibatches come from
// derive_seed(seed, 0); FIEM's second stream from derive_seed(seed, 1).
RunTrace execute_run(const ExperimentConfig& cfg, const PreparedProblem& prob, Algorithm algo,
                     std::uint64_t seed);

struct RunSummary {
  Algorithm algorithm;
  std::uint64_t seed;
  RunStatus status;
  std::string message;
  std::uint64_t epochs;
  std::uint64_t updates;
  OracleCounters counters;
  double final_W;
  double final_h_sq_norm;
  std::string trace_file;
};

struct ExperimentResult {
  std::vector<RunSummary> runs;
  std::size_t diverged = 0;
  bool divergence_exceeded = false;
};

// Writes manifest.txt, trace_<algo>_<seed>.csv and summary.csv under
// cfg.output. Runs execute on up to `jobs` threads.
ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned jobs = 1);

// CSV --------------------------------------------------------------------

// epoch,t,k,tau,W,h_sq_norm,ce_count,mstep_count,wall_ms,status,phase
void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& records);
void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& records);
std::vector<TraceRecord> read_trace_csv(const std::string& path);
std::string format_double(double v);

// Quantiles ------------------------------------------------------------------

struct QuantileRow {
  std::uint64_t epoch;
  double quantile;
  double h_sq_norm;
  double W;
};

// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

// Per-epoch quantiles across traces. Traces must share the same epoch
// sequence; otherwise ArgumentError ("misaligned cadences").
std::vector<QuantileRow> summarize_quantiles(const std::vector<std::vector<TraceRecord>>& traces,
                                             const std::vector<double>& quantiles);
std::vector<QuantileRow> summarize_quantiles(const std::vector<std::string>& trace_files,
                                             const std::vector<double>& quantiles);
void write_quantiles_csv(std::ostream& os, const std::vector<QuantileRow>& rows);

// Complexity -----------------------------------------------------------------

struct ComplexitySettings {
  Algorithm algorithm = Algorithm::kSpiderEm;
  std::vector<double> weights = {0.2, 0.8};
  std::vector<double> means = {0.5, -0.5};
  double variance = 1.0;
  double gamma = 0.01;
  double epsilon = 2.5e-5;
  std::size_t trials = 20;
  std::uint64_t cap_epochs = 500;
  std::uint64_t seed = 1;
  SamplingMode sampling = SamplingMode::kWithReplacement;
  // 0 selects b = ceil(sqrt(n) / 20) and k_in = ceil(n / b).
  std::size_t b = 0;
  std::uint64_t k_in = 0;
};

struct ComplexityTrial {
  bool hit;
  std::uint64_t tau_emp;
  std::uint64_t t_emp;
  std::uint64_t k_ce;  // conditional expectations net of initialisation
};

struct ComplexityPoint {
  std::size_t n = 0;
  std::size_t b = 0;
  std::uint64_t k_in = 0;
  double median_k_opt = 0.0;
  double median_k_ce = 0.0;  // net of the n initialisation CEs
  std::size_t trials = 0;
  double hit_rate = 0.0;
  std::vector<ComplexityTrial> raw;
};

struct ComplexityEstimate {
  std::vector<ComplexityPoint> points;
};

ComplexityEstimate estimate_complexity(const ComplexitySettings& settings,
                                       const std::vector<std::size_t>& n_grid,
                                       unsigned jobs = 1);
void write_complexity_csv(std::ostream& os, const ComplexityEstimate& est);
// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Check suites ---------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool passed;
  double max_deviation;
  double tolerance;
  std::string detail;
};

// "sampler", "equivalence", "gradient" or "all".
std::vector<CheckResult> run_check_suite(const std::string& suite);

}  // namespace vrem
