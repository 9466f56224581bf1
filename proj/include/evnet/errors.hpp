#pragma once

#include <stdexcept>
#include <string>

namespace evnet {

/// Invalid parameter values (negative rates, empty inputs, out-of-range sizes).
class domain_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The chain has transient states or is otherwise not solvable for a unique
/// stationary vector (typically lambda == 0).
class degenerate_chain_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Regression design matrix does not have full column rank.
class singular_design_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No allocation satisfies the budget / QoS constraints.
class infeasible_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario file or command-line problems.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace evnet
