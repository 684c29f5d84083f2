#ifndef BRANCHLAB_CONTOUR_HPP
#define BRANCHLAB_CONTOUR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "branchlab/errors.hpp"
#include "branchlab/interaction.hpp"
#include "branchlab/offspring.hpp"
#include "branchlab/piecewise_path.hpp"
#include "branchlab/rng.hpp"

namespace branchlab {

// Piecewise-linear exploration path. Breakpoints are the extrema (plus the
// final position); the slope magnitude is constant. Local time at a level is
// counted by completed down-crossings, normalized by 2/(cN).
struct ContourPath {
  PiecewisePath path;  // kind = linear, events = (s, level) breakpoints
  double slope = 2.0;
  double c_norm = 2.0;
  int n_norm = 1;
  double ceiling = std::numeric_limits<double>::infinity();
  int trees_completed = 0;

  // Event log for the change-of-measure weight; level-length based so it is
  // independent of the time parametrization.
  struct Segment {
    double length;   // level distance covered
    bool rising;
    int left_count;  // completed down-crossings at the current level
  };
  struct ClockEvent {
    bool birth;      // true: binary-birth clock jump; false: binary-death clock
    int left_count;
  };
  std::vector<Segment> segments;
  std::vector<ClockEvent> clock_events;
  bool has_event_log = false;

  double duration() const { return path.events.empty() ? 0.0 : path.events.back().first; }

  // total level distance travelled while rising / overall
  double rising_fraction() const {
    double up = 0.0, all = 0.0;
    for (std::size_t i = 1; i < path.events.size(); ++i) {
      const double d = path.events[i].second - path.events[i - 1].second;
      all += std::fabs(d);
      if (d > 0.0) up += d;
    }
    return all > 0.0 ? up / all : 0.0;
  }
};

struct LocalTimeProfile {
  std::vector<double> values;      // L(t) per queried level
  std::vector<bool> at_breakpoint; // true where the query hit a breakpoint level
};

// L(t) = (2 / cN) * #completed down-crossings of level t. Queries that land
// exactly on a breakpoint level are flagged and evaluated one ulp below.
inline LocalTimeProfile local_time_profile(const ContourPath& contour,
                                           std::span<const double> levels) {
  std::vector<double> lo, hi;  // down-segments (lo, hi)
  const auto& ev = contour.path.events;
  for (std::size_t i = 1; i < ev.size(); ++i) {
    if (ev[i].second < ev[i - 1].second) {
      lo.push_back(ev[i].second);
      hi.push_back(ev[i - 1].second);
    }
  }
  std::sort(lo.begin(), lo.end());
  std::sort(hi.begin(), hi.end());
  LocalTimeProfile out;
  out.values.reserve(levels.size());
  out.at_breakpoint.reserve(levels.size());
  const double norm = 2.0 / (contour.c_norm * double(contour.n_norm));
  for (double level : levels) {
    const bool collides =
        std::binary_search(lo.begin(), lo.end(), level) ||
        std::binary_search(hi.begin(), hi.end(), level);
    const double t = collides ? std::nextafter(level, -1.0) : level;
    const auto n_lo = std::upper_bound(lo.begin(), lo.end(), t) - lo.begin();   // lo <= t
    const auto started = lo.end() - std::upper_bound(lo.begin(), lo.end(), t); // lo > t
    (void)started;
    const auto n_hi = std::upper_bound(hi.begin(), hi.end(), t) - hi.begin();  // hi <= t
    // crossings: lo < t < hi  ->  (# lo <= t') - (# hi <= t') with t' nudged
    const double count = double(n_lo - n_hi);
    out.values.push_back(norm * count);
    out.at_breakpoint.push_back(collides);
  }
  return out;
}

struct DirectContourOptions {
  double s_max = std::numeric_limits<double>::infinity();
  int max_trees = -1;  // stop after this many returns to 0 (-1: no limit)
  std::int64_t event_budget = 100'000'000;
  bool log_events = false;
};

// Direct stack-based simulation of the renormalized exploration process.
// Per unit of level distance the hazards are
//   falling: gammaN + N (df at L)^+   (new branch; multi-birth share gamma1)
//   rising:  gamma0 + N (df at L)^-   (branch top)
// with L the number of completed down-crossings at the current level. The
// declared slope 2 a_N only sets the time parametrization. Multi-birth events
// draw a branch count Lambda and leave Lambda - 1 pending reflections at
// their level; falls bounce off the deepest pending level, off 0 (next tree)
// and off the ceiling.
class DirectContourSimulator {
 public:
  DirectContourSimulator(const ModelSet& model, const InteractionFunction& f, double ceiling,
                         Rng& rng)
      : model_(model), grid_(f, model.k.big_n), ceiling_(ceiling), rng_(&rng) {}

  ContourPath run(const DirectContourOptions& opts) {
    ContourPath out;
    out.slope = 2.0 * model_.k.aN;
    out.c_norm = model_.k.c;
    out.n_norm = model_.k.big_n;
    out.ceiling = ceiling_;
    out.has_event_log = opts.log_events;
    out.path.kind = PiecewisePath::Kind::linear;
    out.path.append(0.0, 0.0);

    const int n = model_.k.big_n;
    const double cn = model_.k.c * double(n);
    double h = 0.0, s = 0.0;
    bool rising = true;
    int cur = 0;
    double last_max = 0.0;
    std::int64_t extrema = 0;

    delta_.clear();
    stack_.clear();

    auto log_segment = [&](double len, bool up, int lc) {
      if (opts.log_events && len > 0.0) out.segments.push_back({len, up, lc});
    };
    auto out_of_time = [&](double want_len) {
      // remaining exploration time converted to level distance
      const double budget_len = (opts.s_max - s) * out.slope;
      return want_len >= budget_len;
    };
    auto advance = [&](double len) { s += len / out.slope; };
    auto stop_mid_segment = [&]() {
      const double budget_len = (opts.s_max - s) * out.slope;
      log_segment(budget_len, rising, cur);
      h += rising ? budget_len : -budget_len;
      s = opts.s_max;
      out.path.append(s, h);
    };

    while (true) {
      if (++extrema > opts.event_budget)
        throw budget_exceeded_error("direct contour event budget");
      if (rising) {
        // walk upward across breakpoints until a death fires or the ceiling
        bool flipped = false;
        while (!flipped) {
          auto it = delta_.upper_bound(h);
          const double key = it != delta_.end() ? it->first : std::numeric_limits<double>::infinity();
          const double top = std::min(key, ceiling_);
          const double haz = model_.k.gamma0 + double(n) * std::max(-grid_.delta(cur + 1), 0.0);
          const double dist = haz > 0.0 ? rng_->exponential(haz) : std::numeric_limits<double>::infinity();
          if (h + dist < top) {
            if (out_of_time(dist)) { stop_mid_segment(); return out; }
            log_segment(dist, true, cur);
            advance(dist);
            h += dist;
            if (opts.log_events) {
              // split the death clock: only the cN share is tilted by f
              const double u = rng_->uniform() * model_.k.gamma0;
              if (u < cn) out.clock_events.push_back({false, cur});
            }
            flipped = true;
          } else if (key < ceiling_) {
            const double step = key - h;
            if (out_of_time(step)) { stop_mid_segment(); return out; }
            log_segment(step, true, cur);
            advance(step);
            h = key;
            cur += it->second;
          } else {
            const double step = ceiling_ - h;
            if (out_of_time(step)) { stop_mid_segment(); return out; }
            log_segment(step, true, cur);
            advance(step);
            h = ceiling_;  // truncation: turn around, no clock event
            flipped = true;
          }
        }
        out.path.append(s, h);
        last_max = h;
        rising = false;
      } else {
        bool flipped = false;
        while (!flipped) {
          auto it = delta_.lower_bound(h);
          const bool has_below = it != delta_.begin();
          const auto below = has_below ? std::prev(it) : delta_.end();
          const double key = has_below ? below->first : -std::numeric_limits<double>::infinity();
          const double stop_level = stack_.empty() ? 0.0 : stack_.back().level;
          const double floor_level = std::max(key, stop_level);
          const double haz = model_.k.gammaN + double(n) * std::max(grid_.delta(cur + 1), 0.0);
          const double dist = haz > 0.0 ? rng_->exponential(haz) : std::numeric_limits<double>::infinity();
          if (h - dist > floor_level) {
            if (out_of_time(dist)) { stop_mid_segment(); return out; }
            log_segment(dist, false, cur);
            advance(dist);
            h -= dist;
            // classify the birth event
            const double r_inter = double(n) * std::max(grid_.delta(cur + 1), 0.0);
            double u = rng_->uniform() * haz;
            if (u < model_.k.gamma1) {
              const int lambda = model_.lambda1.sample(*rng_);
              if (lambda >= 2) {
                if (!stack_.empty() && !(h > stack_.back().level))
                  throw std::logic_error("reflection stack order violated");
                stack_.push_back({h, lambda - 1});
              }
            } else if (u < model_.k.gamma1 + cn) {
              if (opts.log_events) out.clock_events.push_back({true, cur});
            } else {
              (void)r_inter;  // interaction birth: single branch, no log entry
            }
            insert_down_segment(h, last_max, cur);
            flipped = true;
          } else if (key > stop_level) {
            const double step = h - key;
            if (out_of_time(step)) { stop_mid_segment(); return out; }
            log_segment(step, false, cur);
            advance(step);
            h = key;
            cur -= below->second;
          } else {
            const double step = h - floor_level;
            if (out_of_time(step)) { stop_mid_segment(); return out; }
            log_segment(step, false, cur);
            advance(step);
            h = floor_level;
            if (!stack_.empty() && floor_level == stack_.back().level) {
              if (--stack_.back().remaining == 0) stack_.pop_back();
            } else {
              ++out.trees_completed;
              if (opts.max_trees >= 0 && out.trees_completed >= opts.max_trees) {
                out.path.append(s, h);
                return out;
              }
            }
            insert_down_segment(h, last_max, cur);
            flipped = true;
          }
        }
        out.path.append(s, h);
        rising = true;
      }
    }
  }

 private:
  struct Pending {
    double level;
    int remaining;
  };

  void insert_down_segment(double lo, double hi, int& cur) {
    delta_[lo] += 1;
    delta_[hi] -= 1;
    cur += 1;
  }

  const ModelSet& model_;
  InteractionGrid grid_;
  double ceiling_;
  Rng* rng_;
  std::map<double, int> delta_;
  std::vector<Pending> stack_;
};

inline ContourPath direct_contour(const ModelSet& model, const InteractionFunction& f,
                                  double ceiling, const DirectContourOptions& opts, Rng& rng) {
  DirectContourSimulator sim(model, f, ceiling, rng);
  return sim.run(opts);
}

// Change-of-measure weight turning the f = 0 exploration law into the
// interacting one, evaluated from the event log:
//   prod over binary-birth clock jumps (1 + f_N'(arg)+ / cN)
// * prod over binary-death clock jumps (1 + f_N'(arg)- / cN)
// * exp(- int f_N'+ d(fall length) - int f_N'- d(rise length)),
// with arg = (completed crossings at the current level) / N.
inline double girsanov_weight(const ContourPath& contour, const InteractionFunction& f, int n,
                              double c) {
  if (!contour.has_event_log) throw missing_log_error("girsanov_weight needs an event log");
  if (!f.derivative_bound().has_value())
    throw unbounded_derivative_error("girsanov_weight needs a bounded derivative");
  const double cn = c * double(n);
  auto fn_prime = [&](int left_count) {
    const double x = double(left_count) / n;
    return double(n) * (f(x + 1.0 / n) - f(x));
  };
  double log_w = 0.0;
  for (const auto& ev : contour.clock_events) {
    const double fp = fn_prime(ev.left_count);
    const double tilt = ev.birth ? std::max(fp, 0.0) : std::max(-fp, 0.0);
    log_w += std::log1p(tilt / cn);
  }
  double exponent = 0.0;
  for (const auto& seg : contour.segments) {
    const double fp = fn_prime(seg.left_count);
    exponent += seg.rising ? std::max(-fp, 0.0) * seg.length : std::max(fp, 0.0) * seg.length;
  }
  return std::exp(log_w - exponent);
}

}  // namespace branchlab

#endif
