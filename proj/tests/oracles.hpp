/*
 * Copyright 2026 The zsntta Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Independent reference implementations used by the unit tests and the
// acceptance binary. They are deliberately naive and share no code with
// the library beyond plain data types.

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

/// Within-class variance objective evaluated from scratch: two-pass mean
/// and variance of each side of `lambda`.
inline double split_objective(const std::vector<double>& scores, double lambda) {
  double sum_hi = 0, sum_lo = 0;
  std::size_t n_hi = 0, n_lo = 0;
  for (double s : scores) {
    if (s > lambda) {
      sum_hi += s;
      ++n_hi;
    } else {
      sum_lo += s;
      ++n_lo;
    }
  }
  if (n_hi == 0 || n_lo == 0) return std::numeric_limits<double>::infinity();
  const double mu_hi = sum_hi / static_cast<double>(n_hi), mu_lo = sum_lo / static_cast<double>(n_lo);
  double j_hi = 0, j_lo = 0;
  for (double s : scores) {
    if (s > lambda) j_hi += (s - mu_hi) * (s - mu_hi);
    else j_lo += (s - mu_lo) * (s - mu_lo);
  }
  return j_hi / static_cast<double>(n_hi) + j_lo / static_cast<double>(n_lo);
}

struct SplitSearch {
  double best_lambda = 0.5;
  double best_objective = std::numeric_limits<double>::infinity();
  bool degenerate = true;
};

/// Evaluates the objective at every midpoint between consecutive distinct
/// values, O(n^2) overall.
inline SplitSearch exhaustive_split(std::vector<double> scores) {
  std::vector<double> distinct;
  for (double s : scores) {
    bool seen = false;
    for (double d : distinct) seen = seen || d == s;
    if (!seen) distinct.push_back(s);
  }
  // Insertion sort keeps this free of library sorting.
  for (std::size_t i = 1; i < distinct.size(); ++i) {
    for (std::size_t j = i; j > 0 && distinct[j - 1] > distinct[j]; --j) std::swap(distinct[j - 1], distinct[j]);
  }
  SplitSearch out;
  if (distinct.size() < 2) return out;
  out.degenerate = false;
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    const double lambda = 0.5 * (distinct[i] + distinct[i + 1]);
    const double j = split_objective(scores, lambda);
    if (j < out.best_objective) {
      out.best_objective = j;
      out.best_lambda = lambda;
    }
  }
  return out;
}

/// Mann-Whitney by pair counting; ties count one half.
inline double auroc_pairs(const std::vector<double>& clean, const std::vector<double>& noisy) {
  long long twice = 0;
  for (double c : clean) {
    for (double n : noisy) {
      if (c > n) twice += 2;
      else if (c == n) twice += 1;
    }
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(clean.size()) * static_cast<double>(noisy.size()));
}

/// Sweeps every observed score as a ">= t" threshold and keeps the highest
/// one whose true-positive rate reaches 95%.
inline double fpr95_sweep(const std::vector<double>& clean, const std::vector<double>& noisy) {
  double best_t = -std::numeric_limits<double>::infinity();
  std::vector<double> all = clean;
  all.insert(all.end(), noisy.begin(), noisy.end());
  for (double t : all) {
    std::size_t tp = 0;
    for (double c : clean) tp += c >= t ? 1 : 0;
    if (100 * tp >= 95 * clean.size() && t > best_t) best_t = t;
  }
  std::size_t fp = 0;
  for (double n : noisy) fp += n >= best_t ? 1 : 0;
  return static_cast<double>(fp) / static_cast<double>(noisy.size());
}

/// Textbook Adam, written out per coordinate with running beta powers
/// instead of pow().
class ReferenceAdam {
 public:
  ReferenceAdam(std::size_t n, double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(b1), b2_(b2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& theta, const std::vector<double>& g) {
    b1_pow_ *= b1_;
    b2_pow_ *= b2_;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m_[i] = b1_ * m_[i] + (1 - b1_) * g[i];
      v_[i] = b2_ * v_[i] + (1 - b2_) * g[i] * g[i];
      const double mh = m_[i] / (1 - b1_pow_);
      const double vh = v_[i] / (1 - b2_pow_);
      theta[i] = theta[i] - lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  double b1_pow_ = 1.0, b2_pow_ = 1.0;
  std::vector<double> m_, v_;
};

/// Mean two-class cross-entropy of a linear layer with parameters laid out
/// as [w0 (D), w1 (D), b0, b1]; labels are 0 or 1.
inline double linear_ce(const std::vector<double>& params, const std::vector<std::vector<double>>& xs,
                        const std::vector<int>& ys) {
  const std::size_t d = xs.front().size();
  double total = 0;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    double z0 = params[2 * d], z1 = params[2 * d + 1];
    for (std::size_t j = 0; j < d; ++j) {
      z0 += params[j] * xs[n][j];
      z1 += params[d + j] * xs[n][j];
    }
    const double zy = ys[n] == 0 ? z0 : z1;
    total += std::log(std::exp(z0) + std::exp(z1)) - zy;
  }
  return total / static_cast<double>(xs.size());
}

/// One row of the reference accuracy table.
struct AccuracyTriple {
  std::string label;
  double acc_s, acc_n, acc_h;
};

inline std::vector<AccuracyTriple> load_accuracy_triples(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<AccuracyTriple> out;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::vector<std::string> f;
    for (std::string cell; std::getline(row, cell, '\t');) f.push_back(cell);
    if (f.size() != 7) continue;
    out.push_back({f[0] + "/" + f[1] + "/" + f[2] + "/" + f[3], std::stod(f[4]), std::stod(f[5]), std::stod(f[6])});
  }
  return out;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("zsntta_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<unsigned char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace oracle
