#include "fhmc/accumulators.hpp"

#include <cstring>
#include <stdexcept>
#include <utility>

#include "fhmc/simd/kernels.hpp"

namespace fhmc {

void Welford::reset(int dim) {
  n_ = 0;
  mean_.assign(dim, 0.0);
  comp_.assign(dim, 0.0);
  m2_.assign(dim, 0.0);
}

void Welford::update(std::span<const double> x) {
  if (x.size() != mean_.size()) {
    throw std::invalid_argument("welford: dimension mismatch");
  }
  if (!simd::all_finite(x.data(), x.size())) {
    throw std::invalid_argument("welford: non-finite update");
  }
  ++n_;
  simd::welford_step(mean_.data(), comp_.data(), m2_.data(), x.data(),
                     1.0 / static_cast<double>(n_), x.size());
}

std::vector<double> Welford::variance() const {
  if (n_ < 2) {
    throw std::invalid_argument("welford: variance undefined for count < 2");
  }
  std::vector<double> out(m2_.size());
  double inv = 1.0 / static_cast<double>(n_ - 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m2_[i] * inv;
  return out;
}

long long window_start(long long n, long long l) {
  if (n < 0 || l < 1) {
    throw std::invalid_argument("window_start: need n >= 0, L >= 1");
  }
  long long a = l * (n / l - 1);
  return a > 0 ? a : 0;
}

void DrawScoreWindow::Buffer::clear() {
  draws.clear();
  scores.clear();
  count = 0;
}

void DrawScoreWindow::Buffer::push(std::span<const double> d,
                                   std::span<const double> s) {
  draws.insert(draws.end(), d.begin(), d.end());
  scores.insert(scores.end(), s.begin(), s.end());
  ++count;
}

DrawScoreWindow::DrawScoreWindow(int dim, long long switch_interval,
                                 WindowMode mode)
    : dim_(dim), l_(switch_interval), mode_(mode) {
  if (dim < 1 || switch_interval < 1) {
    throw std::invalid_argument("window: need dim >= 1, L >= 1");
  }
  fg_draws_.reset(dim);
  fg_scores_.reset(dim);
  bg_draws_.reset(dim);
  bg_scores_.reset(dim);
}

bool DrawScoreWindow::push(std::span<const double> draw,
                           std::span<const double> score) {
  just_switched_ = false;
  if (draw.size() != static_cast<std::size_t>(dim_) ||
      score.size() != static_cast<std::size_t>(dim_)) {
    throw std::invalid_argument("window: dimension mismatch");
  }
  if (!simd::all_finite(draw.data(), draw.size()) ||
      !simd::all_finite(score.data(), score.size())) {
    return false;
  }
  if (mode_ == WindowMode::moments) {
    fg_draws_.update(draw);
    fg_scores_.update(score);
    bg_draws_.update(draw);
    bg_scores_.update(score);
  } else {
    fg_buf_.push(draw, score);
    bg_buf_.push(draw, score);
  }
  ++n_total_;
  if (n_total_ % l_ == 0) {
    if (mode_ == WindowMode::moments) {
      fg_draws_ = std::exchange(bg_draws_, Welford(dim_));
      fg_scores_ = std::exchange(bg_scores_, Welford(dim_));
    } else {
      fg_buf_ = std::exchange(bg_buf_, Buffer{});
    }
    just_switched_ = true;
  }
  return true;
}

long long DrawScoreWindow::count() const {
  return mode_ == WindowMode::moments ? fg_draws_.count() : fg_buf_.count;
}

const Welford& DrawScoreWindow::draw_moments() const {
  if (mode_ != WindowMode::moments) {
    throw std::logic_error("window: moments not tracked in buffered mode");
  }
  return fg_draws_;
}

const Welford& DrawScoreWindow::score_moments() const {
  if (mode_ != WindowMode::moments) {
    throw std::logic_error("window: moments not tracked in buffered mode");
  }
  return fg_scores_;
}

Eigen::MatrixXd DrawScoreWindow::draw_matrix() const {
  if (mode_ != WindowMode::buffered) {
    throw std::logic_error("window: columns not stored in moments mode");
  }
  return Eigen::Map<const Eigen::MatrixXd>(fg_buf_.draws.data(), dim_,
                                           fg_buf_.count);
}

Eigen::MatrixXd DrawScoreWindow::score_matrix() const {
  if (mode_ != WindowMode::buffered) {
    throw std::logic_error("window: columns not stored in moments mode");
  }
  return Eigen::Map<const Eigen::MatrixXd>(fg_buf_.scores.data(), dim_,
                                           fg_buf_.count);
}

}  // namespace fhmc
