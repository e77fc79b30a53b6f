#include "llmsim/workload.hpp"

#include <string>

#include "llmsim/errors.hpp"

namespace llmsim {

void validate(const WorkloadSpec& w) {
  if (w.avg_isl < 1) throw ConfigError("avg_isl", "must be >= 1");
  if (w.avg_osl < 1) throw ConfigError("avg_osl", "must be >= 1");
}

// Average lengths as served through each model.
WorkloadSpec make_workload_preset(std::string_view name) {
  if (name == "longalpaca_70b") return {"longalpaca_70b", 9092, 208};
  if (name == "combined_short_70b") return {"combined_short_70b", 106, 26};
  if (name == "mlperf_405b") return {"mlperf_405b", 9428, 684};
  if (name == "combined_short_405b") return {"combined_short_405b", 89, 20};
  throw ConfigError("workload",
                    "unknown workload preset '" + std::string(name) + "'");
}

std::vector<std::string> workload_preset_names() {
  return {"longalpaca_70b", "combined_short_70b", "mlperf_405b",
          "combined_short_405b"};
}

}  // namespace llmsim
