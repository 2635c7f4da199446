#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hlr {

// One instance observed through m feature views.
struct MultiViewSample {
  std::vector<Eigen::VectorXd> views;
  int view_count() const { return static_cast<int>(views.size()); }
};

// Sample collection with a labelled prefix. labels.size() == l and sample i
// carries labels[i] iff i < l; label_mask supports dropping a label without
// reordering anything (all generators produce an all-true prefix mask).
struct Dataset {
  std::vector<MultiViewSample> samples;
  std::vector<double> labels;
  std::vector<char> label_mask;

  int size() const { return static_cast<int>(samples.size()); }
  int label_count() const { return static_cast<int>(labels.size()); }
  int view_count() const;
  std::vector<int> view_dims() const;

  // Enforces uniform view shapes, l <= n, mask shape, mask true => labelled.
  void validate() const;
};

// Builds a dataset from per-view feature matrices (rows are samples) and a
// labelled prefix. Shapes must agree across views.
Dataset make_dataset(const std::vector<Eigen::MatrixXd>& view_features,
                     const std::vector<double>& labels);

// Fully labelled single-view draw: x ~ U[0,1)^dim, y = beta . x + noise,
// noise ~ N(0, noise_std^2). Stream order: all of X row by row, then one
// normal per sample; when noise_std == 0 no noise words are consumed, so the
// clean and noisy datasets for one seed share identical inputs.
Dataset gen_linear_uniform(int n, int dim, const Eigen::VectorXd& beta,
                           double noise_std, std::uint64_t seed);

// Flips the sign of floor(rate * l) labels, chosen uniformly without
// replacement. Returns the corrupted dataset and the sorted corrupted index
// set. rate in [0, 1].
std::pair<Dataset, std::vector<int>> corrupt_sign_flip(const Dataset& ds,
                                                       double rate,
                                                       std::uint64_t seed);

// Asymmetric flips for labels in {-1, +1}: a +1 label flips with probability
// rho_plus, a -1 label with rho_minus. One uniform draw per labelled sample,
// in index order, whether or not it flips. Returns the flipped index set.
std::pair<Dataset, std::vector<int>> flip_binary_labels(const Dataset& ds,
                                                        double rho_plus,
                                                        double rho_minus,
                                                        std::uint64_t seed);

// CSV layout: one sample per row, views concatenated in order, label last
// when with_labels is true. An empty label field marks the row unlabelled.
// A header row is detected by any non-numeric, non-empty cell in row one.
// Labelled rows are moved ahead of unlabelled ones (stable order).
Dataset load_csv(const std::string& path, const std::vector<int>& view_dims,
                 bool with_labels);

// Inverse of load_csv at full precision; write-then-load is exact.
void write_csv(const Dataset& ds, const std::string& path);

// Contiguous equispaced fold split over the labelled prefix: fold sizes
// differ by at most one, every labelled sample lands in exactly one test
// fold, and each train set keeps the remaining labelled samples (unlabelled
// samples ride along in every train set). Requires 2 <= folds <= l.
struct FoldPair {
  Dataset train;
  Dataset test;  // fully labelled
};
std::vector<FoldPair> split_folds(const Dataset& ds, int folds);

// Keeps floor(fraction * l) labels, chosen uniformly; the rest become
// unlabelled inputs. Kept labelled samples are moved to the front (stable).
Dataset mask_labels(const Dataset& ds, double keep_fraction,
                    std::uint64_t seed);

// Dense header-free numeric CSV, for explicit operator matrices.
Eigen::MatrixXd load_matrix_csv(const std::string& path);

}  // namespace hlr
