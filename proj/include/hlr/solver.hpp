#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "hlr/data.hpp"
#include "hlr/kernel.hpp"
#include "hlr/manifold.hpp"

namespace hlr {

// Trainer parameters. view_weights empty selects the uniform default 1/m.
struct HlrConfig {
  double lambda = 1e-3;    // ambient-norm regularization, > 0
  double gamma = 0.0;      // manifold regularization, >= 0
  double delta_xi = 0.1;   // threshold reduction per refinement, > 0
  int refinements = 0;     // outer refinement budget T, >= 0
  Eigen::VectorXd view_weights;

  void validate(int views) const;
  Eigen::VectorXd resolved_weights(int views) const;
};

// Indices of currently-labelled samples split by signed error
// e_i = prediction_i - y_i at a threshold xi:
//   plus: e_i >= +xi, minus: e_i <= -xi, zero: |e_i| < xi.
struct PartitionSets {
  std::vector<int> plus;
  std::vector<int> zero;
  std::vector<int> minus;
  int total() const {
    return static_cast<int>(plus.size() + zero.size() + minus.size());
  }
};

struct SystemMatrices {
  Eigen::MatrixXd lhs;
  Eigen::VectorXd rhs;
};

// Mutable training state. w holds one coefficient column per view (n x m);
// retained marks the labels still in play; xi is the current threshold.
struct HlrState {
  Eigen::MatrixXd w;
  std::vector<char> retained;
  double xi = 0.0;
  int tau = 0;
};

struct RemovalRecord {
  int index;        // position in the training dataset
  int refinement;   // refinement step that dropped it (1-based)
};

// Fitted model: everything needed to evaluate the decision function.
struct HlrModel {
  Eigen::MatrixXd w;
  std::vector<MultiViewSample> support;
  std::vector<KernelSpec> kernels;
  Eigen::VectorXd view_weights;
  HlrConfig config;
  std::vector<double> xi_history;   // xi after the initial fit and each step
  std::vector<RemovalRecord> removed;
};

// Decision values at all training points: sum_a c_a G^a w^a, length n.
Eigen::VectorXd decision_values(const GramBlocks& gram,
                                const Eigen::VectorXd& c,
                                const Eigen::MatrixXd& w);

// Decision value for one query given its per-view kernel rows.
double decision_value(const std::vector<Eigen::VectorXd>& kernel_rows,
                      const Eigen::VectorXd& c, const Eigen::MatrixXd& w);

PartitionSets compute_partition(const Dataset& ds,
                                const std::vector<char>& retained,
                                const Eigen::VectorXd& predictions, double xi);

// Largest absolute error over retained labels. Rejects an empty retained set.
double compute_xi(const Dataset& ds, const std::vector<char>& retained,
                  const Eigen::VectorXd& predictions);

// Stationarity system for a fixed partition, flattened view-major
// (row a*n + i is view a, sample i):
//   row(a,i):  2 l lambda w_i^a + 2 l gamma (M^a G^a w^a)_i
//              + [i in zero] c_a sum_b c_b (G^b w^b)_i
//            = b_i c_a,
// with b_i = -xi on plus, y_i on zero, +xi on minus, 0 otherwise, and l the
// retained-label count. manifold may be null when gamma == 0.
SystemMatrices assemble_system(const GramBlocks& gram,
                               const ManifoldOperator* manifold,
                               const HlrConfig& config, const Dataset& ds,
                               const std::vector<char>& retained,
                               const PartitionSets& partition, double xi);

// Dense partial-pivot LU with a residual check and one step of iterative
// refinement; throws SolverError with a conditioning estimate on failure.
Eigen::VectorXd solve_linear(const SystemMatrices& sys);

// Unbounded-threshold fit: every retained label sits in the quadratic piece,
// so the system is linear outright. Sets xi to the largest resulting error.
HlrState initial_solve(const Dataset& ds, const GramBlocks& gram,
                       const ManifoldOperator* manifold,
                       const HlrConfig& config);

// One threshold-reduction step at xi_new = state.xi - delta_xi:
//   1. guard: xi_new <= 0 terminates, state untouched;
//   2. solve at the partition induced by the current w and xi_new;
//   3. re-partition at the new w; an empty zero set terminates;
//   4. drop plus/minus labels, then refit on the survivors, dropping any
//      label whose error reaches xi_new, until the fit and the partition
//      agree (this keeps every accepted state exactly stationary);
//   5. commit: xi becomes the largest surviving error (< xi_new).
// Dropping the last label terminates with the previous state intact.
// Returns true when terminated; removals are appended on commit only.
bool refine_step(HlrState& state, const Dataset& ds, const GramBlocks& gram,
                 const ManifoldOperator* manifold, const HlrConfig& config,
                 std::vector<RemovalRecord>& removals);

// Full pipeline: initial fit plus up to config.refinements reduction steps.
HlrModel fit(const Dataset& ds, const std::vector<KernelSpec>& kernels,
             const ManifoldOperator* manifold, const HlrConfig& config);

double predict(const HlrModel& model, const MultiViewSample& query);
Eigen::VectorXd predict_batch(const HlrModel& model,
                              const std::vector<MultiViewSample>& queries);
// Sign of the decision value; zero maps to +1.
int predict_sign(const HlrModel& model, const MultiViewSample& query);

// Regularized empirical risk at threshold xi over retained labels:
//   (1/l) sum_i huber(xi, y_i - pred_i) + lambda sum_a w^a' G^a w^a
//   + gamma sum_a (G^a w^a)' M^a (G^a w^a).
double objective_value(const Dataset& ds, const std::vector<char>& retained,
                       const GramBlocks& gram, const ManifoldOperator* manifold,
                       const HlrConfig& config, const Eigen::MatrixXd& w,
                       double xi);

// Pointwise optimality residual, flattened view-major:
//   psi(a,i) = -[i retained] (1/l) huber_deriv(xi, y_i - pred_i) c_a
//              + 2 lambda w_i^a + 2 gamma (M^a G^a w^a)_i.
// Zero everywhere iff w minimizes the objective at this xi. The objective
// gradient in w is blockdiag(G^a) psi.
Eigen::VectorXd stationarity_residual(const Dataset& ds,
                                      const std::vector<char>& retained,
                                      const GramBlocks& gram,
                                      const ManifoldOperator* manifold,
                                      const HlrConfig& config,
                                      const Eigen::MatrixXd& w, double xi);

}  // namespace hlr
