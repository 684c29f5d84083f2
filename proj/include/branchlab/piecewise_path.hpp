#ifndef BRANCHLAB_PIECEWISE_PATH_HPP
#define BRANCHLAB_PIECEWISE_PATH_HPP

#include <algorithm>
#include <utility>
#include <vector>

namespace branchlab {

// Time-indexed path record. Population paths are piecewise constant
// (cadlag); contour paths are piecewise linear between breakpoints.
struct PiecewisePath {
  enum class Kind { constant, linear };

  Kind kind = Kind::constant;
  std::vector<std::pair<double, double>> events;  // (time, value), time increasing from 0
  double horizon = 0.0;

  void append(double t, double v) { events.emplace_back(t, v); }

  double value_at(double t) const {
    if (events.empty()) return 0.0;
    if (t <= events.front().first) return events.front().second;
    auto it = std::upper_bound(events.begin(), events.end(), t,
                               [](double x, const auto& e) { return x < e.first; });
    const auto& prev = *(it - 1);
    if (kind == Kind::constant || it == events.end()) return prev.second;
    const auto& next = *it;
    const double w = (t - prev.first) / (next.first - prev.first);
    return prev.second + w * (next.second - prev.second);
  }

  double final_value() const { return events.empty() ? 0.0 : events.back().second; }
};

enum class EventKind {
  natural_small,      // reproduction drawn from the small-jump law
  natural_big,        // reproduction drawn from the big-jump law
  binary,             // critical binary reproduction
  interaction_birth,  // +1 from a positive f increment
  interaction_death,  // -1 from a negative f increment
};

struct PathEvent {
  double t = 0.0;
  EventKind kind = EventKind::binary;
  int offspring = 0;  // drawn offspring count for reproduction events
};

}  // namespace branchlab

#endif
