#pragma once

#include <map>
#include <string>

#include "teamopt/team_model.hpp"

namespace teamopt {

// Parameter bag for benchmark construction; unknown keys are rejected.
struct BenchmarkParams {
  std::map<std::string, double> scalars;
  std::map<std::string, std::vector<double>> vectors;

  double get(const std::string& key, double fallback) const;
  std::vector<double> get(const std::string& key,
                          std::vector<double> fallback) const;
};

// Catalog: witsenhausen, test_channel, vector_test_channel, relay,
// static_output_feedback. Every returned spec passes validate_team with the
// quadratic per-slot form flag set. Throws UnknownBenchmark for other names.
TeamSpec build_benchmark(const std::string& name,
                         const BenchmarkParams& params = {});

std::vector<std::string> benchmark_names();

}  // namespace teamopt
