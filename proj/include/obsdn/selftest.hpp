#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace obsdn::selftest {

struct Check {
  std::string name;
  double value = 0.0;  // measured error or deviation
  double limit = 0.0;  // pass iff value < limit
  bool pass = false;
};

struct Report {
  std::vector<Check> checks;
  double seconds = 0.0;
  bool passed() const;
};

struct ProjectionSuiteOptions {
  std::size_t instances = 1000;
  std::size_t min_m = 2;
  std::size_t max_m = 64;
  std::size_t feasible_samples = 100;
  std::uint64_t seed = 1;
};

// Random (delta, rho) instances: two-step projection against Dykstra,
// feasibility of the result, and minimum distance against random feasible points.
Report projection_suite(const ProjectionSuiteOptions& opts = {});

// Finite-difference checks of every graph primitive (limit 1e-5) and of the
// attack objective and the three training losses (limit 1e-4).
Report gradient_suite(std::uint64_t seed = 1);

}  // namespace obsdn::selftest
