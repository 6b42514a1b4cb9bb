#include "mvblow/loss_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mvblow {

LossPath::LossPath(std::vector<double> t, std::vector<double> v)
    : t_(std::move(t)), v_(std::move(v)) {
  if (t_.size() != v_.size())
    throw std::invalid_argument("LossPath: time/value size mismatch");
}

void LossPath::append(double t, double v) {
  if (!t_.empty() && t <= t_.back())
    throw std::invalid_argument("LossPath: times must increase");
  t_.push_back(t);
  v_.push_back(v);
}

void LossPath::register_jump(std::size_t index, double size) {
  if (index >= t_.size()) throw std::invalid_argument("LossPath: jump index");
  jumps_.push_back({index, size});
}

double LossPath::jump_at(std::size_t index) const {
  for (const Jump& j : jumps_)
    if (j.index == index) return j.size;
  return 0.0;
}

double LossPath::value_at(double t) const {
  if (t_.empty()) return 0.0;
  if (t <= t_.front()) return v_.front();
  if (t >= t_.back()) return v_.back();
  std::size_t lo = 0, hi = t_.size() - 1;
  while (lo + 1 < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (t_[mid] <= t) lo = mid; else hi = mid;
  }
  if (t == t_[lo]) return v_[lo];
  // interpolate toward the left limit of the right node
  double vr = left_limit(hi);
  double w = (t - t_[lo]) / (t_[hi] - t_[lo]);
  return v_[lo] + w * (vr - v_[lo]);
}

double LossPath::left_limit(std::size_t index) const {
  return v_[index] - jump_at(index);
}

double LossPath::first_jump_time() const {
  double t = std::numeric_limits<double>::infinity();
  for (const Jump& j : jumps_) t = std::min(t, t_[j.index]);
  return t;
}

double LossPath::sup_distance(const LossPath& other,
                              const std::vector<double>& probes) const {
  double d = 0.0;
  for (double t : probes)
    d = std::max(d, std::abs(value_at(t) - other.value_at(t)));
  return d;
}

void LossPath::validate(double jump_threshold, bool bounded_by_one) const {
  for (std::size_t k = 0; k < v_.size(); ++k) {
    if (v_[k] < -1e-12)
      throw std::runtime_error("LossPath: negative value at node " + std::to_string(k));
    if (bounded_by_one && v_[k] > 1.0 + 1e-9)
      throw std::runtime_error("LossPath: value above 1 at node " + std::to_string(k));
    if (k > 0) {
      double inc = v_[k] - v_[k - 1];
      if (inc < -1e-12)
        throw std::runtime_error("LossPath: decreasing at node " + std::to_string(k));
      if (inc > jump_threshold && jump_at(k) == 0.0)
        throw std::runtime_error("LossPath: unregistered jump-size increment at node " +
                                 std::to_string(k));
    }
  }
  for (const Jump& j : jumps_) {
    if (j.index == 0) continue;  // initial-time jumps carry the full value
    double inc = v_[j.index] - v_[j.index - 1];
    if (inc + 1e-12 < j.size)
      throw std::runtime_error("LossPath: increment below registered jump size");
  }
}

}  // namespace mvblow
