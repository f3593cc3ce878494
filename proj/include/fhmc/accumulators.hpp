#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace fhmc {

// Streaming mean and unbiased variance via Welford's recurrences, one state
// per coordinate.
class Welford {
 public:
  Welford() = default;
  explicit Welford(int dim) { reset(dim); }

  void reset(int dim);
  // Throws std::invalid_argument on non-finite input or dimension mismatch.
  void update(std::span<const double> x);

  long long count() const { return n_; }
  int dim() const { return static_cast<int>(mean_.size()); }
  std::span<const double> mean() const { return mean_; }
  // Unbiased (n-1) variance; throws std::invalid_argument when count < 2.
  std::vector<double> variance() const;

 private:
  long long n_ = 0;
  std::vector<double> mean_, comp_, m2_;
};

// a_n = max(0, L * (floor(n / L) - 1)): first draw index informing the
// estimate that samples draw n. The window [a_n, n) has length in [L, 2L).
long long window_start(long long n, long long l);

enum class WindowMode {
  moments,   // Welford pairs only, O(d) memory
  buffered,  // raw draw/score columns, O(k d) memory (low-rank estimation)
};

// Paired foreground/background accumulators over (draw, score) pairs. Both
// tracks see every pair; after the push that makes the total a multiple of L
// the foreground is replaced by the background and the background restarts.
// The estimate serving draw n is then built on exactly the pairs [a_n, n).
class DrawScoreWindow {
 public:
  DrawScoreWindow(int dim, long long switch_interval, WindowMode mode);

  // Returns false (and leaves both tracks unchanged) on non-finite input.
  bool push(std::span<const double> draw, std::span<const double> score);

  bool just_switched() const { return just_switched_; }
  long long total_pushed() const { return n_total_; }
  long long count() const;  // pairs in the foreground
  long long switch_interval() const { return l_; }
  WindowMode mode() const { return mode_; }
  int dim() const { return dim_; }

  // moments mode
  const Welford& draw_moments() const;
  const Welford& score_moments() const;

  // buffered mode: d x k column matrices of the foreground window
  Eigen::MatrixXd draw_matrix() const;
  Eigen::MatrixXd score_matrix() const;

 private:
  struct Buffer {
    std::vector<double> draws, scores;  // column-major, dim x count
    long long count = 0;
    void clear();
    void push(std::span<const double> d, std::span<const double> s);
  };

  int dim_;
  long long l_;
  WindowMode mode_;
  long long n_total_ = 0;
  bool just_switched_ = false;
  Welford fg_draws_, fg_scores_, bg_draws_, bg_scores_;
  Buffer fg_buf_, bg_buf_;
};

}  // namespace fhmc
