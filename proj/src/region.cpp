#include "memobs/region.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "memobs/errors.hpp"

namespace memobs {

ObservationRegion::ObservationRegion(std::vector<Interval> intervals) {
  for (const Interval& piece : intervals) {
    if (!std::isfinite(piece.lo) || !std::isfinite(piece.hi) || !(piece.lo < piece.hi)) {
      throw ValidationError(fmt::format("malformed interval [{}, {}]: need lo < hi", piece.lo, piece.hi));
    }
  }
  std::sort(intervals.begin(), intervals.end(), [](const Interval& a, const Interval& b) {
    if (a.lo != b.lo) return a.lo < b.lo;
    return a.closed_lo && !b.closed_lo;
  });
  for (const Interval& piece : intervals) {
    if (!intervals_.empty()) {
      Interval& last = intervals_.back();
      const bool overlaps = piece.lo < last.hi;
      const bool touches = piece.lo == last.hi && (last.closed_hi || piece.closed_lo);
      if (overlaps || touches) {
        if (piece.hi > last.hi) {
          last.hi = piece.hi;
          last.closed_hi = piece.closed_hi;
        } else if (piece.hi == last.hi) {
          last.closed_hi = last.closed_hi || piece.closed_hi;
        }
        continue;
      }
    }
    intervals_.push_back(piece);
  }
}

ObservationRegion ObservationRegion::whole(double length) {
  return ObservationRegion({Interval{0.0, length, true, true}});
}

double ObservationRegion::measure() const {
  double total = 0.0;
  for (const Interval& piece : intervals_) total += piece.length();
  return total;
}

bool ObservationRegion::contains(double x) const {
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [x](const Interval& piece) { return piece.contains(x); });
}

void ObservationRegion::check_within(double length) const {
  const double slack = 1e-12 * length;
  for (const Interval& piece : intervals_) {
    if (piece.lo < -slack || piece.hi > length + slack) {
      throw ValidationError(
          fmt::format("interval [{}, {}] leaves the domain [0, {}]", piece.lo, piece.hi, length));
    }
  }
}

ObservationRegion ObservationRegion::united(const ObservationRegion& other) const {
  std::vector<Interval> all(intervals_.begin(), intervals_.end());
  all.insert(all.end(), other.intervals_.begin(), other.intervals_.end());
  return ObservationRegion(std::move(all));
}

}  // namespace memobs
