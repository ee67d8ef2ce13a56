#include "costcal/lang/term.hpp"

#include <charconv>
#include <cctype>
#include <map>
#include <sstream>

#include "costcal/lang/operators.hpp"

namespace costcal::lang {

Term Term::compound(std::string functor, std::vector<Term> args) {
  if (args.empty()) return atom(std::move(functor));
  return Term(Compound{std::move(functor), std::move(args)});
}

Term Term::cons(Term head, Term tail) {
  return compound(".", {std::move(head), std::move(tail)});
}

Term Term::list(std::vector<Term> elems, Term tail) {
  Term out = std::move(tail);
  for (auto it = elems.rbegin(); it != elems.rend(); ++it)
    out = cons(std::move(*it), std::move(out));
  return out;
}

bool Term::is_cons() const {
  return is_compound() && as_compound().functor == "." &&
         as_compound().args.size() == 2;
}

std::string_view Term::functor() const {
  if (is_atom()) return as_atom().name;
  if (is_compound()) return as_compound().functor;
  return {};
}

int Term::arity() const {
  return is_compound() ? static_cast<int>(as_compound().args.size()) : 0;
}

bool operator==(const Term& a, const Term& b) {
  if (a.node_.index() != b.node_.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node_);
        if constexpr (std::is_same_v<T, Var>) {
          return x.id == y.id && x.name == y.name;
        } else if constexpr (std::is_same_v<T, Atom>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, Compound>) {
          return x.functor == y.functor && x.args == y.args;
        } else {
          return x == y;
        }
      },
      a.node_);
}

namespace {

bool alpha_eq(const Term& a, const Term& b,
              std::map<std::uint64_t, std::uint64_t>& fwd,
              std::map<std::uint64_t, std::uint64_t>& bwd) {
  if (a.is_var() && b.is_var()) {
    auto ia = a.as_var().id, ib = b.as_var().id;
    auto f = fwd.find(ia);
    auto r = bwd.find(ib);
    if (f == fwd.end() && r == bwd.end()) {
      fwd[ia] = ib;
      bwd[ib] = ia;
      return true;
    }
    return f != fwd.end() && r != bwd.end() && f->second == ib &&
           r->second == ia;
  }
  if (a.node().index() != b.node().index()) return false;
  if (a.is_compound()) {
    const auto& ca = a.as_compound();
    const auto& cb = b.as_compound();
    if (ca.functor != cb.functor || ca.args.size() != cb.args.size())
      return false;
    for (std::size_t i = 0; i < ca.args.size(); ++i)
      if (!alpha_eq(ca.args[i], cb.args[i], fwd, bwd)) return false;
    return true;
  }
  return a == b;
}

bool is_letter_atom(std::string_view s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0])))
    return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

bool is_symbol_atom(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!is_symbol_char(c)) return false;
  return true;
}

std::string quote_atom(std::string_view s) {
  if (is_letter_atom(s) || s == "[]" || is_symbol_atom(s)) return std::string(s);
  std::string out = "'";
  for (char c : s) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  return out + "'";
}

std::string format_float(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  auto e = s.find_first_of("eE");
  std::string mant = s.substr(0, e);
  std::string exp = e == std::string::npos ? "" : s.substr(e);
  if (mant.find('.') == std::string::npos &&
      mant.find_first_of("ni") == std::string::npos)
    mant += ".0";
  return mant + exp;
}

void write(std::ostream& os, const Term& t, int max_prec);

void write_arg(std::ostream& os, const Term& t) { write(os, t, 999); }

void write(std::ostream& os, const Term& t, int max_prec) {
  if (t.is_var()) {
    os << t.as_var().name;
    return;
  }
  if (t.is_int()) {
    os << t.as_int();
    return;
  }
  if (t.is_float()) {
    os << format_float(t.as_float());
    return;
  }
  if (t.is_atom()) {
    const auto& n = t.as_atom().name;
    bool op = infix_op(n) || prefix_op(n);
    if (op && max_prec < 1200) {
      os << '(' << quote_atom(n) << ')';
    } else {
      os << quote_atom(n);
    }
    return;
  }
  const auto& c = t.as_compound();
  if (t.is_cons()) {
    os << '[';
    write_arg(os, c.args[0]);
    const Term* rest = &c.args[1];
    while (rest->is_cons()) {
      os << ',';
      write_arg(os, rest->arg(0));
      rest = &rest->arg(1);
    }
    if (!rest->is_nil()) {
      os << '|';
      write_arg(os, *rest);
    }
    os << ']';
    return;
  }
  if (c.args.size() == 2) {
    if (auto op = infix_op(c.functor)) {
      int p = op->priority;
      int lp = op->type == OpType::yfx ? p : p - 1;
      int rp = op->type == OpType::xfy ? p : p - 1;
      bool paren = p > max_prec;
      if (paren) os << '(';
      write(os, c.args[0], lp);
      if (c.functor == ",") {
        os << ", ";
      } else {
        os << ' ' << c.functor << ' ';
      }
      write(os, c.args[1], rp);
      if (paren) os << ')';
      return;
    }
  }
  if (c.args.size() == 1 && c.functor == ":-") {
    os << ":- ";
    write(os, c.args[0], 1199);
    return;
  }
  os << quote_atom(c.functor) << '(';
  for (std::size_t i = 0; i < c.args.size(); ++i) {
    if (i) os << ',';
    write_arg(os, c.args[i]);
  }
  os << ')';
}

}  // namespace

bool alpha_equivalent(const Term& a, const Term& b) {
  std::map<std::uint64_t, std::uint64_t> fwd, bwd;
  return alpha_eq(a, b, fwd, bwd);
}

std::size_t symbol_count(const Term& t) {
  if (!t.is_compound()) return 1;
  std::size_t n = 1;
  for (const auto& a : t.as_compound().args) n += symbol_count(a);
  return n;
}

void for_each_var(const Term& t, const std::function<void(const Var&)>& fn) {
  if (t.is_var()) {
    fn(t.as_var());
  } else if (t.is_compound()) {
    for (const auto& a : t.as_compound().args) for_each_var(a, fn);
  }
}

std::string to_string(const Term& t) {
  std::ostringstream os;
  write(os, t, 1200);
  return os.str();
}

}  // namespace costcal::lang
