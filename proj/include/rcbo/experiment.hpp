#ifndef RCBO_EXPERIMENT_HPP
#define RCBO_EXPERIMENT_HPP

#include "rcbo/domain.hpp"
#include "rcbo/dynamics.hpp"
#include "rcbo/objective.hpp"
#include "rcbo/parallel.hpp"
#include "rcbo/report.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rcbo {

using Config = SolverConfig<double>;

// ---------------------------------------------------------------------------
// Success rates

// Runs `runs` replicas; replica r uses seed replica_seed(cfg.seed, r). A run
// succeeds when its final consensus is within `eps` (Euclidean) of
// `reference`. Replicas that hit a numerical error count as failures.
SuccessReport success_rate(const Config& cfg, const Objective<double>& obj, const Domain& dom, Index runs,
                           double eps, const VectorXd& reference, unsigned workers = default_workers(),
                           std::vector<VectorXd>* final_consensus = nullptr);

enum class TableId { Ackley, Heart, Rastrigin, Rosenbrock };

std::string to_string(TableId id);
TableId parse_table(const std::string& name);

// One cell of a benchmark table. `variant` is the scheme name for the
// Ackley table and "standard"/"repelling" for Rosenbrock.
struct TableCellSpec {
    TableId table = TableId::Ackley;
    std::string variant = "projection";
    Index dimension = 2;
    Index particles = 10;
    Index steps_or_inv_h = 5; // 1/h for Ackley (t = 1), K otherwise
};

struct TableOptions {
    Index runs = 1000;
    unsigned workers = default_workers();
    std::uint64_t master_seed = 1;
    bool long_run = false;      // include Rastrigin d = 500
    double repelling_lambda0 = 1; // lambda(t) = lambda0 / (1 + t^2)
};

struct TableCell {
    TableCellSpec spec;
    std::uint64_t seed = 0;
    SuccessReport report;
};

// Fully resolved experiment for a cell: solver, objective, domain, reference
// point and success radius.
struct CellSetup {
    Config config;
    Objective<double> objective;
    Domain domain;
    VectorXd reference;
    double eps = 0.1;
};

std::vector<TableCellSpec> table_cells(TableId id, bool long_run = false);
CellSetup cell_setup(const TableCellSpec& spec, const TableOptions& options);
std::uint64_t cell_seed(const TableCellSpec& spec, std::uint64_t master_seed);
TableCell run_table_cell(const TableCellSpec& spec, const TableOptions& options);
std::vector<TableCell> reproduce_table(TableId id, const TableOptions& options,
                                       const std::function<void(const TableCell&)>& on_cell = {});

// Columns: table, scheme, d, N, k_or_inv_h, rate, ci_lo, ci_hi, runs, seed.
CsvTable table_csv(const std::vector<TableCell>& cells, const TableOptions& options);

// ---------------------------------------------------------------------------
// Propagation-of-chaos rate study

struct LogLogFit {
    double slope = 0;
    double intercept = 0;
    double slope_se = 0;
};

// Least-squares fit of log(y) against log(n). The slope standard error is
// propagated from the per-point standard errors `y_se` (delta method).
LogLogFit fit_loglog(const std::vector<Index>& n, const std::vector<double>& y, const std::vector<double>& y_se);

struct RateStudyReport {
    std::vector<Index> n_values;
    std::vector<double> mean_error;
    std::vector<double> error_se;
    double slope = 0;
    double slope_se = 0;
    Index n_ref = 0;
    Index replicas = 0;
    VectorXd reference;
    ConfigSnapshot config;
};

// For each N, the mean over replicas of |consensus_N - reference|, where the
// reference is the replica-averaged consensus at N_ref. Throws
// InsufficientReplicas when the slope standard error exceeds 0.1.
RateStudyReport chaos_rate_study(const Config& cfg, const Objective<double>& obj, const Domain& dom,
                                 const std::vector<Index>& n_list, Index n_ref, Index replicas,
                                 unsigned workers = default_workers());

CsvTable rate_study_csv(const RateStudyReport& report);

// Quadratic test problem for the rate study: f(x) = |x - (0.5, 0.3)|^2 + 1 on
// the disc of radius 2, alpha = 1, beta = 1, sigma = 0.5, h = 0.05, K = 20.
struct ChaosSetup {
    Config config;
    Objective<double> objective;
    Domain domain;
};
ChaosSetup default_chaos_setup(std::uint64_t seed = 1);

// ---------------------------------------------------------------------------
// Variance decay

struct DecayOptions {
    Index particles = 50;
    Index dimension = 2;
    double h = 0.01;
    double t_end = 1.0;
    std::vector<double> check_times{0.25, 0.5, 1.0};
    double slack = 1.25;
    std::uint64_t seed = 1;
    unsigned workers = default_workers();
};

struct DecayResult {
    bool pass = false;
    double eta0 = 0;
    std::vector<double> times;
    std::vector<double> variance; // replica-averaged ensemble variance
    std::vector<double> bound;    // Var(0) e^{-eta0 t} * slack
    std::string failure;          // offending time point when !pass
    ConfigSnapshot config;
};

// Constant objective on a ball, so the decay rate is eta0 = 2 beta - 2 sigma^2.
// Rejects eta0 <= 0 with ConfigError.
DecayResult variance_decay_check(double beta, double sigma, double alpha, const Domain& ball, Index replicas,
                                 const DecayOptions& options = {});

CsvTable decay_curve_csv(const DecayResult& result);

// ---------------------------------------------------------------------------
// Langevin invariant measure

struct InvariantDensity {
    double lo = 0;
    double hi = 1;
    std::vector<double> grid;    // cell centres
    std::vector<double> density; // normalized: sum density * dx = 1
    double residual = 0;
    int iterations = 0;
};

// Damped fixed-point iteration for rho = exp(-(2/sigma^2)(U + V * rho)) / Z
// on `cells` uniform cells of [lo, hi]. Throws OracleNonConvergence when the
// max-norm update exceeds `tol` after `max_iterations`.
InvariantDensity invariant_density_oracle(const LangevinConfig<double>& cfg, double lo, double hi, int cells = 2048,
                                          double tol = 1e-10, int max_iterations = 10000, double damping = 0.5);

struct LangevinCheckResult {
    bool pass = false;
    double l1 = 0;
    std::vector<double> bin_lo;
    std::vector<double> empirical; // bin probabilities
    std::vector<double> oracle;    // bin probabilities
    std::vector<double> w1_times;
    std::vector<double> w1; // W1(empirical ensemble, oracle) during the run
    InvariantDensity density;
    ConfigSnapshot config;
};

inline constexpr int langevin_bins = 64;
inline constexpr double langevin_l1_tolerance = 0.1;

LangevinCheckResult langevin_invariant_check(const LangevinConfig<double>& cfg, const Domain& interval, Index burn_in,
                                             Index samples);

// Named 1-D test configurations: "quadratic" (V = 0, Gaussian), "flat"
// (large sigma), "double-well" (quartic U with quadratic interaction).
struct LangevinCase {
    std::string name;
    LangevinConfig<double> config;
    Domain domain;
    Index burn_in = 0;
    Index samples = 0;
};
LangevinCase langevin_case(const std::string& name, std::uint64_t seed = 1);

CsvTable langevin_histogram_csv(const LangevinCheckResult& result);
CsvTable langevin_w1_csv(const LangevinCheckResult& result);

// ---------------------------------------------------------------------------
// Inverse problem

struct InvertOptions {
    Index runs = 1000;
    double alpha = 1e14;
    Index particles = 400;
    Index steps = 100;
    double h = 0.01;
    double eps = 0.01;
    double lambda_reg = 1e-6;
    double noise_scale = 1.0;
    std::uint64_t seed = 1;
    unsigned workers = default_workers();
};

struct InvertResult {
    SuccessReport report;
    std::vector<VectorXd> estimates; // final consensus (sigma, m, gamma) per replica
};

InvertResult invert_merton(const InvertOptions& options);

// Histogram of one estimate component over [lo, hi] with `bins` bins.
CsvTable parameter_histogram_csv(const std::vector<VectorXd>& estimates, Index component, double lo, double hi,
                                 int bins, const ConfigSnapshot& config);

} // namespace rcbo

#endif // RCBO_EXPERIMENT_HPP
