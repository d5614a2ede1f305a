#include "avgmpc/history.hpp"

#include <cassert>
#include <cmath>
#include <string>

namespace avgmpc {

HistoryState::HistoryState(int period, int output_dim, std::vector<Vector> columns)
    : period_(period), output_dim_(output_dim), columns_(std::move(columns)) {
  if (period < 1) throw ConfigError("period T must be >= 1");
  if (output_dim < 1) throw ConfigError("output dimension p must be >= 1");
  if (static_cast<int>(columns_.size()) != period - 1)
    throw ConfigError("history needs exactly T-1 = " + std::to_string(period - 1) +
                      " columns, got " + std::to_string(columns_.size()));
  for (const Vector& c : columns_)
    if (c.size() != output_dim) throw ConfigError("history column has wrong dimension");
}

HistoryState HistoryState::constant(int period, const Vector& h) {
  const auto count = static_cast<std::size_t>(std::max(period - 1, 0));
  return HistoryState(period, static_cast<int>(h.size()), std::vector<Vector>(count, h));
}

HistoryState HistoryState::from_flat(int period, int output_dim, std::span<const double> values) {
  if (period < 1 || output_dim < 1) throw ConfigError("invalid history shape");
  const std::size_t expected = static_cast<std::size_t>(period - 1) * output_dim;
  if (values.size() != expected)
    throw ConfigError("flat history has " + std::to_string(values.size()) + " values, expected " +
                      std::to_string(expected));
  std::vector<Vector> cols;
  for (int j = 0; j < period - 1; ++j)
    cols.push_back(Eigen::Map<const Vector>(values.data() + static_cast<std::size_t>(j) * output_dim,
                                            output_dim));
  return HistoryState(period, output_dim, std::move(cols));
}

HistoryState HistoryState::shifted(const Vector& h_new) const {
  if (h_new.size() != output_dim_) throw DomainError("output sample has wrong dimension");
  if (columns_.empty()) return *this;
  std::vector<Vector> cols(columns_.begin() + 1, columns_.end());
  cols.push_back(h_new);
  return HistoryState(period_, output_dim_, std::move(cols));
}

HistoryState HistoryState::minus(const Vector& h) const {
  if (h.size() != output_dim_) throw DomainError("reference output has wrong dimension");
  std::vector<Vector> cols;
  cols.reserve(columns_.size());
  for (const Vector& c : columns_) cols.push_back(c - h);
  return HistoryState(period_, output_dim_, std::move(cols));
}

std::vector<double> HistoryState::flatten() const {
  std::vector<double> out;
  out.reserve(columns_.size() * static_cast<std::size_t>(output_dim_));
  for (const Vector& c : columns_) out.insert(out.end(), c.data(), c.data() + c.size());
  return out;
}

bool operator==(const HistoryState& a, const HistoryState& b) {
  if (a.period_ != b.period_ || a.output_dim_ != b.output_dim_) return false;
  for (std::size_t j = 0; j < a.columns_.size(); ++j)
    if (a.columns_[j] != b.columns_[j]) return false;
  return true;
}

bool in_history_set(const HistoryState& H, const OutputRange& range, double tol) {
  for (const Vector& c : H.columns())
    if ((c.array() < range.low.array() - tol).any() || (c.array() > range.high.array() + tol).any())
      return false;
  return true;
}

HistoryState shift_update(const HistoryState& H, const Vector& h_new, const OutputRange& range,
                          double tol) {
  if (h_new.size() != H.output_dim()) throw DomainError("output sample has wrong dimension");
  if ((h_new.array() < range.low.array() - tol).any() ||
      (h_new.array() > range.high.array() + tol).any())
    throw DomainError("output sample outside the admissible output range");
  return H.shifted(h_new);
}

double norm_replacement(const HistoryState& H) {
  double worst = 0.0;
  for (const Vector& c : H.columns()) worst = std::max(worst, c.cwiseMax(0.0).sum());
  return worst;
}

double deviation_one_norm(const HistoryState& H, const Vector& h_s) {
  double worst = 0.0;
  for (const Vector& c : H.columns()) worst = std::max(worst, (c - h_s).lpNorm<1>());
  return worst;
}

double iss_function(const HistoryState& H, const Vector& h_s, double kappa) {
  if (H.period() < 2) throw DomainError("ISS function needs T >= 2 (the history is empty)");
  if (!(kappa > 0.0)) throw DomainError("ISS exponent kappa must be positive");
  double sum = 0.0;
  for (int i = 0; i < H.size(); ++i)
    sum += (i + 1) * std::pow((H.column(i) - h_s).lpNorm<1>(), kappa);
  return sum;
}

int period_remainder(int horizon, int period) {
  if (horizon < 1 || period < 1) throw DomainError("horizon and period must be positive");
  const int periods = (horizon + period - 1) / period;
  return periods * period - horizon;
}

Vector period_sum_bound(const HistoryState& H, int horizon) {
  const int k = period_remainder(horizon, H.period());
  assert(k <= H.size());
  Vector bound = Vector::Zero(H.output_dim());
  for (int i = 1; i <= k; ++i) bound -= H.column(H.size() - i);
  return bound;
}

}  // namespace avgmpc
