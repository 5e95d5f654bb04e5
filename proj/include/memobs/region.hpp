#pragma once

#include <span>
#include <vector>

namespace memobs {

/// One piece of an observation region. Endpoints may be open or closed; the
/// distinction only matters for deciding whether single points are covered.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool closed_lo = true;
  bool closed_hi = true;

  double length() const { return hi - lo; }
  bool contains(double x) const {
    return (x > lo || (closed_lo && x == lo)) && (x < hi || (closed_hi && x == hi));
  }
};

/// Finite union of disjoint intervals. Overlapping or touching inputs are
/// merged on construction, so intervals() is sorted and pairwise disjoint.
class ObservationRegion {
 public:
  ObservationRegion() = default;
  explicit ObservationRegion(std::vector<Interval> intervals);

  static ObservationRegion whole(double length);

  std::span<const Interval> intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  double measure() const;
  bool contains(double x) const;

  /// Throws ValidationError unless every interval lies in [0, length].
  void check_within(double length) const;

  ObservationRegion united(const ObservationRegion& other) const;

 private:
  std::vector<Interval> intervals_;
};

}  // namespace memobs
