#pragma once

// Renewal-reward estimation of the long-term average AoI from epoch
// records: point = sum(R) / sum(y), with a delta-method 95% interval.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "aoi/model.hpp"

namespace aoi {

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr std::size_t kMinEpochsForCi = 30;

struct RenewalEstimate {
  double point = 0.0;
  double ci_half_width = 0.0;
  std::size_t n_epochs = 0;
  bool small_sample = false;  // fewer than kMinEpochsForCi epochs
};

struct RatioSums {
  double sum_r = 0.0;
  double sum_y = 0.0;
};

// Delta-method estimate for a ratio of means over i.i.d. (R, y) pairs.
inline RenewalEstimate renewal_estimate(std::span<const EpochRecord> epochs) {
  if (epochs.empty()) throw InvalidParameter("renewal_estimate: no epochs");
  const double n = static_cast<double>(epochs.size());
  double mr = 0.0, my = 0.0;
  for (const auto& e : epochs) {
    mr += e.R;
    my += e.y;
  }
  mr /= n;
  my /= n;
  RenewalEstimate est;
  est.n_epochs = epochs.size();
  est.small_sample = epochs.size() < kMinEpochsForCi;
  est.point = mr / my;
  if (epochs.size() < 2) return est;

  double srr = 0.0, sry = 0.0, syy = 0.0;
  for (const auto& e : epochs) {
    const double dr = e.R - mr;
    const double dy = e.y - my;
    srr += dr * dr;
    sry += dr * dy;
    syy += dy * dy;
  }
  srr /= n - 1.0;
  sry /= n - 1.0;
  syy /= n - 1.0;
  const double p = est.point;
  const double var = std::max(0.0, (srr - 2.0 * p * sry + p * p * syy) / (n * my * my));
  est.ci_half_width = kZ95 * std::sqrt(var);
  return est;
}

inline RenewalEstimate renewal_estimate(const std::vector<EpochRecord>& epochs) {
  return renewal_estimate(std::span<const EpochRecord>(epochs));
}

// Epochs of one source, in simulation order.
inline std::vector<EpochRecord> epochs_of(std::span<const EpochRecord> all, int source_id) {
  std::vector<EpochRecord> out;
  for (const auto& e : all)
    if (e.source_id == source_id) out.push_back(e);
  return out;
}

inline constexpr std::size_t kDefaultBatches = 20;

// Student-t 0.975 quantiles for small degrees of freedom; the normal value
// is close enough beyond 30.
inline double t975(std::size_t dof) {
  static constexpr double table[] = {0,     12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                     2.306, 2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131,
                                     2.120, 2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069,
                                     2.064, 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (dof == 0) return INFINITY;
  if (dof < std::size(table)) return table[dof];
  return kZ95;
}

// Batch-means half-width: the epoch sequence is cut into consecutive
// batches and the spread of the per-batch ratios gives the interval. Used
// for horizon-mode runs where the point estimate includes a partial epoch.
inline double batch_means_half_width(std::span<const EpochRecord> epochs,
                                     std::size_t batches = kDefaultBatches) {
  if (batches < 2 || epochs.size() < 2 * batches) return INFINITY;
  const std::size_t per = epochs.size() / batches;
  std::vector<double> ratios;
  ratios.reserve(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    RatioSums s;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
      s.sum_r += epochs[i].R;
      s.sum_y += epochs[i].y;
    }
    ratios.push_back(s.sum_r / s.sum_y);
  }
  double mean = 0.0;
  for (double r : ratios) mean += r;
  mean /= static_cast<double>(batches);
  double ss = 0.0;
  for (double r : ratios) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / static_cast<double>(batches - 1));
  return t975(batches - 1) * sd / std::sqrt(static_cast<double>(batches));
}

}  // namespace aoi
