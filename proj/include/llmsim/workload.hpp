#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace llmsim {

// Average sequence lengths of a dataset, in tokens.
struct WorkloadSpec {
  std::string name;
  std::uint64_t avg_isl = 1;
  std::uint64_t avg_osl = 1;

  std::uint64_t total() const { return avg_isl + avg_osl; }
  bool operator==(const WorkloadSpec&) const = default;
};

void validate(const WorkloadSpec& workload);

WorkloadSpec make_workload_preset(std::string_view name);
std::vector<std::string> workload_preset_names();

}  // namespace llmsim
