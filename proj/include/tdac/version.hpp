#pragma once

namespace tdac {

inline constexpr const char* library_version = "1.0.0";

// Versions of the on-disk text formats.  Bump when a field changes meaning.
inline constexpr int mdp_format_version = 1;
inline constexpr int config_format_version = 1;
inline constexpr int records_format_version = 1;

inline constexpr const char* mdp_format_name = "tdac-mdp";
inline constexpr const char* config_format_name = "tdac-config";
inline constexpr const char* records_format_name = "tdac-records";

}  // namespace tdac
