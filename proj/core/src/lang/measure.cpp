#include "costcal/lang/measure.hpp"

#include <algorithm>

namespace costcal::lang {

std::optional<std::int64_t> measure(const Term& t, Measure m) {
  switch (m) {
    case Measure::None:
      return 0;
    case Measure::IntValue:
      if (t.is_int() && t.as_int() >= 0) return t.as_int();
      return std::nullopt;
    case Measure::ListLength: {
      std::int64_t n = 0;
      const Term* cur = &t;
      while (cur->is_cons()) {
        ++n;
        cur = &cur->arg(1);
      }
      if (!cur->is_nil()) return std::nullopt;
      return n;
    }
    case Measure::TermSize: {
      if (t.is_var()) return std::nullopt;
      if (!t.is_compound()) return 1;
      std::int64_t n = 1;
      for (const auto& a : t.as_compound().args) {
        auto s = measure(a, m);
        if (!s) return std::nullopt;
        n += *s;
      }
      return n;
    }
    case Measure::TermDepth: {
      if (t.is_var()) return std::nullopt;
      if (!t.is_compound()) return 0;
      std::int64_t d = 0;
      for (const auto& a : t.as_compound().args) {
        auto s = measure(a, m);
        if (!s) return std::nullopt;
        d = std::max(d, *s);
      }
      return d + 1;
    }
  }
  return std::nullopt;
}

}  // namespace costcal::lang
