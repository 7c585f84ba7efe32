#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "tve/analysis.hpp"

namespace tve {

// Everything needed to launch runs of one problem at different (eps, tau).
struct ProblemSetup {
  std::shared_ptr<const Grid> grid;
  std::shared_ptr<const Material> material;
  SchemeConfig cfg;
  LoadingProgram loads;
  VectorField u0;
  ScalarField mu0;

  LinearConfig linear_config(double tau) const;
  RunResult run_nonlinear(double eps, double tau) const;
  LinearRun run_linear(double tau) const;
};

// Thread-safe memo of nonlinear and linear runs keyed by (eps, tau).
class RunCache {
 public:
  explicit RunCache(const ProblemSetup& setup) : setup_(setup) {}
  std::shared_ptr<const RunResult> nonlinear(double eps, double tau);
  std::shared_ptr<const LinearRun> linear(double tau);
  // evaluate the given (eps, tau) pairs on up to `jobs` threads
  void prefetch(const std::vector<std::pair<double, double>>& nonlinear_keys, const std::vector<double>& linear_keys,
                int jobs);
  // cached runs in key order, for artifact output
  std::vector<std::pair<std::pair<double, double>, std::shared_ptr<const RunResult>>> nonlinear_runs();
  std::vector<std::pair<double, std::shared_ptr<const LinearRun>>> linear_runs();

 private:
  const ProblemSetup& setup_;
  std::mutex mu_;
  std::map<std::pair<double, double>, std::shared_ptr<const RunResult>> nl_;
  std::map<double, std::shared_ptr<const LinearRun>> lin_;
};

struct StudyCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct StudyReport {
  std::string kind;
  std::vector<double> ladder;
  std::vector<std::string> norms;
  std::vector<std::vector<double>> errors;   // per norm, per rung (or rung pair)
  std::vector<std::vector<double>> factors;  // per norm, successive ratios
  std::vector<StudyCheck> checks;
  std::vector<double> runtimes;              // seconds per rung, not part of pass logic
  bool passed = false;
  bool degenerate = false;
  std::string note;

  void write_json(const std::string& path) const;
  void write_csv(const std::string& path) const;
};

// throws InsufficientLadder / NonNestedLadder
void check_ladder(const std::vector<double>& ladder, bool nested);

StudyReport tau_refinement_study(const ProblemSetup& setup, const std::vector<double>& taus, int jobs,
                                 NormSpec norms = {}, RunCache* cache = nullptr);
StudyReport epsilon_linearization_study(const ProblemSetup& setup, const std::vector<double>& eps, int jobs,
                                        RunCache* cache = nullptr);
StudyReport apriori_scaling_study(const ProblemSetup& setup, const std::vector<double>& eps, int jobs,
                                  RunCache* cache = nullptr);
StudyReport commutativity_study(const ProblemSetup& setup, const std::vector<double>& eps,
                                const std::vector<double>& taus, int jobs, NormSpec norms = {},
                                RunCache* cache = nullptr);

// least-squares slope of log(y) against log(x)
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace tve
