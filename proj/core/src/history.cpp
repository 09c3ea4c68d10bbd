#include "resqpass/history.hpp"

#include <fstream>
#include <iomanip>
#include <numeric>
#include <stdexcept>

namespace resqpass {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::residual_tol:
      return "residual-tol";
    case Termination::posdef_lost:
      return "posdef-lost";
    case Termination::maxit:
      return "maxit";
  }
  return "unknown";
}

Index ConvergenceHistory::total_inner_iterations() const {
  return std::accumulate(records.begin(), records.end(), Index{0},
                         [](Index acc, const IterationRecord& r) { return acc + r.inner_iters; });
}

void write_history_csv(std::ostream& out, const ConvergenceHistory& history) {
  out << kHistoryCsvHeader << '\n';
  out << std::setprecision(17);
  for (const auto& r : history.records) {
    out << r.k << ',' << r.resnorm << ',' << r.objective << ',' << r.inner_iters << ','
        << r.ws_size << ',' << r.ms << '\n';
  }
}

void write_history_csv(const std::filesystem::path& path, const ConvergenceHistory& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_history_csv(out, history);
}

}  // namespace resqpass
