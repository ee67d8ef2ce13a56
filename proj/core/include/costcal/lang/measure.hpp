#pragma once

#include <cstdint>
#include <optional>

#include "costcal/lang/program.hpp"

namespace costcal::lang {

/// Size of a ground term under `m`:
///   length - number of elements of a proper list
///   size   - number of function symbols and constants
///   depth  - 0 for constants, 1 + max over arguments otherwise
///   int    - the integer itself (must be >= 0)
/// Returns nullopt when the term has no size under `m` (non-list, variable,
/// negative integer). `None` always measures 0.
std::optional<std::int64_t> measure(const Term& t, Measure m);

}  // namespace costcal::lang
