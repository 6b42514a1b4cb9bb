#pragma once

#include <cstddef>
#include <vector>

namespace mvblow {

// Nondecreasing cadlag loss curve on a fixed time grid. Nodes carry the
// post-jump value; registered jumps remember their size so left limits can
// be reconstructed.
class LossPath {
 public:
  struct Jump {
    std::size_t index;
    double size;
  };

  LossPath() = default;
  LossPath(std::vector<double> t, std::vector<double> v);

  void append(double t, double v);
  void register_jump(std::size_t index, double size);

  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& values() const { return v_; }
  const std::vector<Jump>& jumps() const { return jumps_; }
  std::size_t size() const { return t_.size(); }
  bool empty() const { return t_.empty(); }

  double jump_at(std::size_t index) const;  // 0 when no jump registered
  // Piecewise-linear cadlag evaluation; clamps outside the grid.
  double value_at(double t) const;
  // Left limit at node index (value minus any registered jump).
  double left_limit(std::size_t index) const;
  double first_jump_time() const;  // +inf when no jumps

  // max |this - other| sampled at the probe times.
  double sup_distance(const LossPath& other,
                      const std::vector<double>& probes) const;

  // Monotone, within [0, 1 + tol] when bounded is set, increments above
  // jump_threshold must carry a registered jump. Throws on violation.
  void validate(double jump_threshold, bool bounded_by_one = true) const;

 private:
  std::vector<double> t_, v_;
  std::vector<Jump> jumps_;
};

}  // namespace mvblow
