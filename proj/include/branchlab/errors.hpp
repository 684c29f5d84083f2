#ifndef BRANCHLAB_ERRORS_HPP
#define BRANCHLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace branchlab {

struct domain_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A measure component (small-jump or big-jump side) carries no mass, so the
// laws and constants derived from it are undefined.
struct inactive_component_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct empty_tail_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invalid_law_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct budget_exceeded_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct unbounded_derivative_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct missing_log_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct malformed_forest_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace branchlab

#endif
