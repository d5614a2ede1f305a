#pragma once

// The extended state H: the last T-1 auxiliary outputs, needed to pose
// sliding-window constraints that straddle the past and the prediction.

#include "avgmpc/types.hpp"

#include <span>
#include <vector>

namespace avgmpc {

/// p x (T-1) matrix of past outputs, stored as columns oldest first
/// (column 0 is H_1, column T-2 is H_{T-1}). Immutable value type.
class HistoryState {
 public:
  HistoryState() = default;
  HistoryState(int period, int output_dim, std::vector<Vector> columns);

  /// Every column equal to `h`.
  static HistoryState constant(int period, const Vector& h);

  /// Rebuild from `flatten()` output.
  static HistoryState from_flat(int period, int output_dim, std::span<const double> values);

  int period() const { return period_; }
  int output_dim() const { return output_dim_; }
  int size() const { return static_cast<int>(columns_.size()); }
  bool empty() const { return columns_.empty(); }

  /// Zero-based: column(0) is the oldest entry H_1.
  const Vector& column(int j) const { return columns_.at(static_cast<std::size_t>(j)); }
  std::span<const Vector> columns() const { return columns_; }

  /// Drop the oldest column and append `h_new`; no-op for T = 1.
  HistoryState shifted(const Vector& h_new) const;

  /// Column-wise H_j - h.
  HistoryState minus(const Vector& h) const;

  /// p * (T-1) values, oldest column first.
  std::vector<double> flatten() const;

  friend bool operator==(const HistoryState& a, const HistoryState& b);

 private:
  int period_ = 1;
  int output_dim_ = 0;
  std::vector<Vector> columns_;
};

/// Componentwise range [low, high] admissible for one output sample.
struct OutputRange {
  Vector low;
  Vector high;
};

/// True if every column lies in `range` (up to `tol`).
bool in_history_set(const HistoryState& H, const OutputRange& range, double tol = 1e-9);

/// Closed-loop history update. Throws DomainError if `h_new` lies outside `range`.
HistoryState shift_update(const HistoryState& H, const Vector& h_new, const OutputRange& range,
                          double tol = 1e-9);

/// max over columns of the sum of positive parts. Zero iff all entries <= 0.
double norm_replacement(const HistoryState& H);

/// Induced matrix 1-norm of H - H^s: max over columns of ||H_j - h_s||_1.
double deviation_one_norm(const HistoryState& H, const Vector& h_s);

/// sum_{i=1}^{T-1} i * ||H_i - h_s||_1^kappa. Throws DomainError for T = 1.
double iss_function(const HistoryState& H, const Vector& h_s, double kappa);

/// k_{T,N} = ceil(N/T) * T - N, the number of stored columns a horizon of
/// length N still depends on through whole periods.
int period_remainder(int horizon, int period);

/// Upper bound on sum_{k<N} h_k implied by the window constraints:
/// minus the sum of the k_{T,N} newest columns of H.
Vector period_sum_bound(const HistoryState& H, int horizon);

}  // namespace avgmpc
