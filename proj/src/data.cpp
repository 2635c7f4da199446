#include "hlr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hlr/errors.hpp"
#include "hlr/rng.hpp"

namespace hlr {

int Dataset::view_count() const {
  return samples.empty() ? 0 : samples.front().view_count();
}

std::vector<int> Dataset::view_dims() const {
  std::vector<int> dims;
  if (samples.empty()) return dims;
  for (const auto& v : samples.front().views) {
    dims.push_back(static_cast<int>(v.size()));
  }
  return dims;
}

void Dataset::validate() const {
  const int n = size();
  if (n == 0) throw std::invalid_argument("dataset is empty");
  const auto dims = view_dims();
  if (dims.empty()) throw std::invalid_argument("dataset has no views");
  for (int i = 0; i < n; ++i) {
    const auto& s = samples[i];
    if (s.view_count() != static_cast<int>(dims.size())) {
      throw std::invalid_argument("sample " + std::to_string(i) +
                                  " has inconsistent view count");
    }
    for (std::size_t a = 0; a < dims.size(); ++a) {
      if (s.views[a].size() != dims[a]) {
        throw std::invalid_argument("sample " + std::to_string(i) + " view " +
                                    std::to_string(a) +
                                    " has inconsistent dimension");
      }
    }
  }
  if (label_count() > n) {
    throw std::invalid_argument("more labels than samples");
  }
  if (label_mask.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("label mask size mismatch");
  }
  for (int i = 0; i < n; ++i) {
    if (label_mask[i] && i >= label_count()) {
      throw std::invalid_argument("label mask set on unlabelled sample " +
                                  std::to_string(i));
    }
  }
  for (double y : labels) {
    if (!std::isfinite(y)) throw std::invalid_argument("non-finite label");
  }
}

namespace {

std::vector<char> prefix_mask(int n, int l) {
  std::vector<char> mask(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < l; ++i) mask[i] = 1;
  return mask;
}

}  // namespace

Dataset make_dataset(const std::vector<Eigen::MatrixXd>& view_features,
                     const std::vector<double>& labels) {
  if (view_features.empty()) {
    throw std::invalid_argument("make_dataset: no views given");
  }
  const Eigen::Index n = view_features.front().rows();
  Dataset ds;
  ds.samples.resize(static_cast<std::size_t>(n));
  for (const auto& mat : view_features) {
    if (mat.rows() != n) {
      throw std::invalid_argument("make_dataset: view row counts differ");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      ds.samples[static_cast<std::size_t>(i)].views.push_back(
          mat.row(i).transpose());
    }
  }
  ds.labels = labels;
  ds.label_mask = prefix_mask(static_cast<int>(n),
                              static_cast<int>(labels.size()));
  ds.validate();
  return ds;
}

Dataset gen_linear_uniform(int n, int dim, const Eigen::VectorXd& beta,
                           double noise_std, std::uint64_t seed) {
  if (n <= 0 || dim <= 0) {
    throw std::invalid_argument("gen_linear_uniform: n and dim must be > 0");
  }
  if (beta.size() != dim) {
    throw std::invalid_argument("gen_linear_uniform: beta has size " +
                                std::to_string(beta.size()) + ", expected " +
                                std::to_string(dim));
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw std::invalid_argument("gen_linear_uniform: noise_std must be >= 0");
  }
  Rng rng(seed);
  Eigen::MatrixXd x(n, dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) x(i, j) = rng.uniform01();
  }
  std::vector<double> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double v = x.row(i).dot(beta);
    if (noise_std > 0.0) v += rng.normal(0.0, noise_std);
    y[static_cast<std::size_t>(i)] = v;
  }
  return make_dataset({x}, y);
}

std::pair<Dataset, std::vector<int>> corrupt_sign_flip(const Dataset& ds,
                                                       double rate,
                                                       std::uint64_t seed) {
  ds.validate();
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw std::invalid_argument("corrupt_sign_flip: rate must be in [0,1]");
  }
  const int l = ds.label_count();
  const int count = static_cast<int>(std::floor(rate * l));
  std::vector<int> idx(static_cast<std::size_t>(l));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.partial_shuffle(idx, static_cast<std::size_t>(count));
  std::vector<int> corrupted(idx.begin(), idx.begin() + count);
  std::sort(corrupted.begin(), corrupted.end());
  Dataset out = ds;
  for (int i : corrupted) out.labels[static_cast<std::size_t>(i)] *= -1.0;
  return {std::move(out), std::move(corrupted)};
}

std::pair<Dataset, std::vector<int>> flip_binary_labels(const Dataset& ds,
                                                        double rho_plus,
                                                        double rho_minus,
                                                        std::uint64_t seed) {
  ds.validate();
  if (!(rho_plus >= 0.0 && rho_plus <= 1.0) ||
      !(rho_minus >= 0.0 && rho_minus <= 1.0)) {
    throw std::invalid_argument("flip_binary_labels: rates must be in [0,1]");
  }
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    if (ds.labels[i] != 1.0 && ds.labels[i] != -1.0) {
      throw std::invalid_argument("flip_binary_labels: label at index " +
                                  std::to_string(i) + " is not in {-1,+1}");
    }
  }
  Rng rng(seed);
  Dataset out = ds;
  std::vector<int> flipped;
  for (int i = 0; i < ds.label_count(); ++i) {
    const double u = rng.uniform01();
    const double y = ds.labels[static_cast<std::size_t>(i)];
    const double rho = y > 0.0 ? rho_plus : rho_minus;
    if (u < rho) {
      out.labels[static_cast<std::size_t>(i)] = -y;
      flipped.push_back(i);
    }
  }
  return {std::move(out), std::move(flipped)};
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::vector<int>& view_dims,
                 bool with_labels) {
  if (view_dims.empty()) throw std::invalid_argument("load_csv: no view dims");
  int total_dim = 0;
  for (int d : view_dims) {
    if (d <= 0) throw std::invalid_argument("load_csv: view dim must be > 0");
    total_dim += d;
  }
  std::ifstream in(path);
  if (!in) throw DataError("failed to open CSV: " + path);

  const std::size_t width =
      static_cast<std::size_t>(total_dim) + (with_labels ? 1 : 0);
  struct Row {
    MultiViewSample sample;
    bool has_label = false;
    double label = 0.0;
  };
  std::vector<Row> rows;
  std::string line;
  int lineno = 0;
  bool first_content_row = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_cells(line);
    if (first_content_row) {
      first_content_row = false;
      bool header = false;
      for (const auto& c : cells) {
        double v;
        if (!c.empty() && !parse_double(c, v)) {
          header = true;
          break;
        }
      }
      if (header) continue;
    }
    if (cells.size() != width) {
      throw DataError(path + ": row " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(width));
    }
    Row row;
    std::size_t cell = 0;
    for (int d : view_dims) {
      Eigen::VectorXd v(d);
      for (int j = 0; j < d; ++j, ++cell) {
        if (cells[cell].empty()) {
          throw DataError(path + ": row " + std::to_string(lineno) +
                          ", column " + std::to_string(cell + 1) +
                          ": empty feature field");
        }
        double x;
        if (!parse_double(cells[cell], x)) {
          throw DataError(path + ": row " + std::to_string(lineno) +
                          ", column " + std::to_string(cell + 1) +
                          ": cannot parse '" + cells[cell] + "' as a number");
        }
        v[j] = x;
      }
      row.sample.views.push_back(std::move(v));
    }
    if (with_labels) {
      const std::string& lc = cells[cell];
      if (!lc.empty()) {
        double y;
        if (!parse_double(lc, y)) {
          throw DataError(path + ": row " + std::to_string(lineno) +
                          ", column " + std::to_string(cell + 1) +
                          ": cannot parse label '" + lc + "'");
        }
        row.has_label = true;
        row.label = y;
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");

  // Stable partition: labelled rows first.
  Dataset ds;
  for (const auto& r : rows) {
    if (r.has_label) {
      ds.samples.push_back(r.sample);
      ds.labels.push_back(r.label);
    }
  }
  for (const auto& r : rows) {
    if (!r.has_label) ds.samples.push_back(r.sample);
  }
  ds.label_mask = prefix_mask(ds.size(), ds.label_count());
  ds.validate();
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw DataError("failed to open CSV for writing: " + path);
  for (int i = 0; i < ds.size(); ++i) {
    std::string line;
    for (const auto& v : ds.samples[static_cast<std::size_t>(i)].views) {
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (!line.empty()) line += ',';
        line += format_double(v[j]);
      }
    }
    line += ',';
    if (i < ds.label_count()) {
      line += format_double(ds.labels[static_cast<std::size_t>(i)]);
    }
    out << line << '\n';
  }
  if (!out) throw DataError("failed while writing CSV: " + path);
}

std::vector<FoldPair> split_folds(const Dataset& ds, int folds) {
  ds.validate();
  const int l = ds.label_count();
  if (folds < 2) {
    throw std::invalid_argument(
        "split_folds: folds must be >= 2 (one fold leaves an empty train set)");
  }
  if (folds > l) {
    throw std::invalid_argument("split_folds: folds (" + std::to_string(folds) +
                                ") exceeds labelled count (" +
                                std::to_string(l) + ")");
  }
  const int base = l / folds;
  const int extra = l % folds;
  std::vector<FoldPair> out;
  int start = 0;
  for (int f = 0; f < folds; ++f) {
    const int len = base + (f < extra ? 1 : 0);
    const int end = start + len;
    FoldPair fp;
    for (int i = 0; i < l; ++i) {
      const auto& s = ds.samples[static_cast<std::size_t>(i)];
      const double y = ds.labels[static_cast<std::size_t>(i)];
      if (i >= start && i < end) {
        fp.test.samples.push_back(s);
        fp.test.labels.push_back(y);
      } else {
        fp.train.samples.push_back(s);
        fp.train.labels.push_back(y);
      }
    }
    for (int i = l; i < ds.size(); ++i) {
      fp.train.samples.push_back(ds.samples[static_cast<std::size_t>(i)]);
    }
    fp.train.label_mask = prefix_mask(fp.train.size(), fp.train.label_count());
    fp.test.label_mask = prefix_mask(fp.test.size(), fp.test.label_count());
    out.push_back(std::move(fp));
    start = end;
  }
  return out;
}

Dataset mask_labels(const Dataset& ds, double keep_fraction,
                    std::uint64_t seed) {
  ds.validate();
  if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) {
    throw std::invalid_argument("mask_labels: keep_fraction must be in [0,1]");
  }
  const int l = ds.label_count();
  const int keep = static_cast<int>(std::floor(keep_fraction * l));
  std::vector<int> idx(static_cast<std::size_t>(l));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.partial_shuffle(idx, static_cast<std::size_t>(keep));
  std::vector<char> kept(static_cast<std::size_t>(l), 0);
  for (int k = 0; k < keep; ++k) kept[static_cast<std::size_t>(idx[k])] = 1;

  Dataset out;
  for (int i = 0; i < l; ++i) {
    if (kept[static_cast<std::size_t>(i)]) {
      out.samples.push_back(ds.samples[static_cast<std::size_t>(i)]);
      out.labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
    }
  }
  for (int i = 0; i < l; ++i) {
    if (!kept[static_cast<std::size_t>(i)]) {
      out.samples.push_back(ds.samples[static_cast<std::size_t>(i)]);
    }
  }
  for (int i = l; i < ds.size(); ++i) {
    out.samples.push_back(ds.samples[static_cast<std::size_t>(i)]);
  }
  out.label_mask = prefix_mask(out.size(), out.label_count());
  out.validate();
  return out;
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("failed to open CSV: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_cells(line);
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v;
      if (!parse_double(cells[c], v)) {
        throw DataError(path + ": row " + std::to_string(lineno) +
                        ", column " + std::to_string(c + 1) +
                        ": cannot parse '" + cells[c] + "' as a number");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(path + ": row " + std::to_string(lineno) +
                      " has ragged width");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }
  return m;
}

}  // namespace hlr
