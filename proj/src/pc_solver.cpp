#include "tvtopo/pc_solver.hpp"

namespace tvtopo {

void SolverConfig::validate() const {
  if (P < 0) throw ConfigError("solver.P", "must be >= 0");
  if (C < 0) throw ConfigError("solver.C", "must be >= 0");
  if (!(alpha > 0.0)) throw ConfigError("solver.alpha", "must be > 0");
  if (!(beta > 0.0)) throw ConfigError("solver.beta", "must be > 0");
  if (!(h > 0.0)) throw ConfigError("solver.h", "must be > 0");
}

}  // namespace tvtopo
