#pragma once

#include <optional>
#include <string_view>

namespace costcal::lang {

enum class OpType { xfx, xfy, yfx, fy, fx };

struct OpDef {
  int priority;
  OpType type;
};

/// Operator table of the supported subset: clause neck, conjunction,
/// `is/2`, arithmetic comparison and arithmetic.
std::optional<OpDef> infix_op(std::string_view name);
std::optional<OpDef> prefix_op(std::string_view name);

inline bool is_symbol_char(char c) {
  switch (c) {
    case '+': case '-': case '*': case '/': case '\\': case '^': case '<':
    case '>': case '=': case ':': case '.': case '?': case '@': case '#':
    case '&': case '$': case '~':
      return true;
    default:
      return false;
  }
}

}  // namespace costcal::lang
