#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "resqpass/dense.hpp"

namespace resqpass {

enum class Termination { residual_tol, posdef_lost, maxit };

std::string to_string(Termination t);

struct IterationRecord {
  Index k = 0;
  double resnorm = 0.0;
  double objective = 0.0;
  Index inner_iters = 0;
  Index ws_size = 0;
  /// Milliseconds since the start of the solve (monotonic clock).
  double ms = 0.0;
};

struct ConvergenceHistory {
  std::vector<IterationRecord> records;
  Termination termination = Termination::maxit;
  double r0_norm = 0.0;

  Index outer_iterations() const { return static_cast<Index>(records.size()); }
  Index total_inner_iterations() const;
  double wall_ms() const { return records.empty() ? 0.0 : records.back().ms; }
};

inline constexpr const char* kHistoryCsvHeader = "k,resnorm,objective,inner_iters,ws_size,ms";

void write_history_csv(std::ostream& out, const ConvergenceHistory& history);
void write_history_csv(const std::filesystem::path& path, const ConvergenceHistory& history);

}  // namespace resqpass
