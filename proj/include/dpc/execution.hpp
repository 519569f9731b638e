#pragma once

#include <string_view>

namespace dpc {

/// Selects the OpenMP kernel or its serial reference.
enum class Execution { serial, parallel };

inline std::string_view to_string(Execution e) { return e == Execution::serial ? "serial" : "parallel"; }

}  // namespace dpc
