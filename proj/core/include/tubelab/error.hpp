#pragma once

#include <stdexcept>
#include <string>

namespace tubelab {

// All recoverable failures carry a stable machine-readable code so callers
// (and the CLI) can branch on the kind of failure without parsing prose.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

namespace errc {
inline constexpr const char* depth_overflow = "depth-overflow";
inline constexpr const char* radius_too_large = "radius-too-large";
inline constexpr const char* infeasible_schedule = "infeasible-schedule";
inline constexpr const char* non_transverse = "non-transverse";
inline constexpr const char* infeasible_geometry = "infeasible-geometry";
inline constexpr const char* budget_exceeded = "budget-exceeded";
inline constexpr const char* mesh_too_coarse = "mesh-too-coarse";
inline constexpr const char* size_exceeded = "size-exceeded";
inline constexpr const char* overlap = "overlap";
inline constexpr const char* config_invalid = "config-invalid";
}  // namespace errc

}  // namespace tubelab
