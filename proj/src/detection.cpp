#include "gmpd/detection.hpp"

#include <stdexcept>
#include <string>

namespace gmpd {

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "Converged";
    case Termination::MaxIterations: return "MaxIterations";
    case Termination::Diverged: return "Diverged";
    case Termination::Exact: return "Exact";
  }
  return "Unknown";
}

Termination termination_from_string(std::string_view s) {
  for (auto t : {Termination::Converged, Termination::MaxIterations, Termination::Diverged,
                 Termination::Exact}) {
    if (to_string(t) == s) return t;
  }
  throw std::invalid_argument("unknown termination '" + std::string(s) + "'");
}

}  // namespace gmpd
