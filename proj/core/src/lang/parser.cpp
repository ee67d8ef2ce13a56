#include "costcal/lang/parser.hpp"

#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "costcal/error.hpp"
#include "costcal/lang/operators.hpp"

namespace costcal::lang {
namespace {

enum class Tok { Atom, QAtom, Var, Int, Float, Punct, End, Eof };

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  int line = 1;
  int col = 1;
  bool layout_before = false;  // whitespace precedes this token
  std::int64_t ival = 0;
  double fval = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    bool layout = skip_layout();
    Token t;
    t.line = line_;
    t.col = col_;
    t.layout_before = layout;
    if (pos_ >= src_.size()) {
      t.kind = Tok::Eof;
      return t;
    }
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) return number(t);
    if (c == '_' || std::isupper(static_cast<unsigned char>(c))) {
      t.kind = Tok::Var;
      t.text = ident();
      return t;
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      t.kind = Tok::Atom;
      t.text = ident();
      return t;
    }
    if (c == '\'') return quoted(t);
    if (c == '(' || c == ')' || c == '[' || c == ']' || c == '|' ||
        c == ',') {
      advance();
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      return t;
    }
    if (c == '!' || c == ';') {
      advance();
      t.kind = Tok::Atom;
      t.text = std::string(1, c);
      return t;
    }
    if (c == '.') {
      char n = pos_ + 1 < src_.size() ? src_[pos_ + 1] : ' ';
      if (std::isspace(static_cast<unsigned char>(n)) || n == '%') {
        advance();
        t.kind = Tok::End;
        t.text = ".";
        return t;
      }
    }
    if (is_symbol_char(c)) {
      std::string s;
      while (pos_ < src_.size() && is_symbol_char(src_[pos_])) {
        s += src_[pos_];
        advance();
      }
      // A symbol run ending in '.' at end of clause: split off the end token.
      if (s.size() > 1 && s.back() == '.' &&
          (pos_ >= src_.size() ||
           std::isspace(static_cast<unsigned char>(src_[pos_])) ||
           src_[pos_] == '%')) {
        s.pop_back();
        --pos_;
        --col_;
      }
      t.kind = Tok::Atom;
      t.text = s;
      return t;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_,
                     col_);
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  bool skip_layout() {
    bool any = false;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        any = true;
      } else if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        any = true;
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        int l = line_, co = col_;
        advance();
        advance();
        while (pos_ + 1 < src_.size() &&
               !(src_[pos_] == '*' && src_[pos_ + 1] == '/'))
          advance();
        if (pos_ + 1 >= src_.size())
          throw ParseError("unterminated block comment", l, co);
        advance();
        advance();
        any = true;
      } else {
        break;
      }
    }
    return any;
  }

  std::string ident() {
    std::string s;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_')) {
      s += src_[pos_];
      advance();
    }
    return s;
  }

  Token number(Token t) {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_])))
      advance();
    bool is_float = false;
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      is_float = true;
      advance();
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      int save_col = col_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
        advance();
      if (pos_ < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        is_float = true;
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          advance();
      } else {
        pos_ = save;
        col_ = save_col;
      }
    }
    std::string text(src_.substr(start, pos_ - start));
    t.text = text;
    if (is_float) {
      t.kind = Tok::Float;
      t.fval = std::stod(text);
    } else {
      t.kind = Tok::Int;
      auto res =
          std::from_chars(text.data(), text.data() + text.size(), t.ival);
      if (res.ec != std::errc())
        throw ParseError("integer literal out of range", t.line, t.col);
    }
    return t;
  }

  Token quoted(Token t) {
    advance();
    std::string s;
    while (true) {
      if (pos_ >= src_.size())
        throw ParseError("unterminated quoted atom", t.line, t.col);
      char c = src_[pos_];
      if (c == '\'') {
        advance();
        if (pos_ < src_.size() && src_[pos_] == '\'') {
          s += '\'';
          advance();
          continue;
        }
        break;
      }
      if (c == '\\' && pos_ + 1 < src_.size()) {
        advance();
        s += src_[pos_];
        advance();
        continue;
      }
      s += c;
      advance();
    }
    t.kind = Tok::QAtom;
    t.text = s;
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::string_view src, std::uint64_t first_id)
      : lex_(src), next_id_(first_id) {
    cur_ = lex_.next();
  }

  bool at_eof() const { return cur_.kind == Tok::Eof; }
  const Token& peek() const { return cur_; }

  /// Reads one clause-level term terminated by '.'.
  Term read_clause() {
    vars_.clear();
    Term t = parse(1200);
    if (cur_.kind != Tok::End) fail("expected '.' to end the clause");
    cur_ = lex_.next();
    return t;
  }

  Term read_single() {
    vars_.clear();
    Term t = parse(1200);
    if (cur_.kind == Tok::End) cur_ = lex_.next();
    if (cur_.kind != Tok::Eof) fail("unexpected text after term");
    return t;
  }

  const std::map<std::string, Term>& vars() const { return vars_; }

  [[noreturn]] void fail(const std::string& msg) const {
    if (cur_.kind == Tok::Eof)
      throw ParseError(msg + " (reached end of input)", cur_.line, cur_.col);
    throw ParseError(msg + " near '" + cur_.text + "'", cur_.line, cur_.col);
  }

 private:
  void consume() { cur_ = lex_.next(); }

  bool is_punct(const char* p) const {
    return cur_.kind == Tok::Punct && cur_.text == p;
  }

  void expect(const char* p) {
    if (!is_punct(p)) fail(std::string("expected '") + p + "'");
    consume();
  }

  // Name of the current token when it can act as an infix operator.
  std::optional<std::string> infix_name() const {
    if (cur_.kind == Tok::Atom) return cur_.text;
    if (cur_.kind == Tok::Punct && cur_.text == ",") return std::string(",");
    return std::nullopt;
  }

  bool starts_term() const {
    switch (cur_.kind) {
      case Tok::Atom: case Tok::QAtom: case Tok::Var: case Tok::Int:
      case Tok::Float:
        return true;
      case Tok::Punct:
        return cur_.text == "(" || cur_.text == "[";
      default:
        return false;
    }
  }

  Term parse(int max_prec) {
    auto [left, left_prec] = primary(max_prec);
    while (true) {
      auto name = infix_name();
      if (!name) break;
      auto op = infix_op(*name);
      if (!op || op->priority > max_prec) break;
      int la = op->type == OpType::yfx ? op->priority : op->priority - 1;
      int ra = op->type == OpType::xfy ? op->priority : op->priority - 1;
      if (left_prec > la) break;
      consume();
      Term right = parse(ra);
      left = Term::compound(*name, {std::move(left), std::move(right)});
      left_prec = op->priority;
    }
    return left;
  }

  std::pair<Term, int> primary(int max_prec) {
    Token t = cur_;
    switch (t.kind) {
      case Tok::Int:
        consume();
        return {Term::integer(t.ival), 0};
      case Tok::Float:
        consume();
        return {Term::real(t.fval), 0};
      case Tok::Var: {
        consume();
        return {variable(t.text), 0};
      }
      case Tok::Punct:
        if (t.text == "(") {
          consume();
          Term inner = parse(1200);
          expect(")");
          return {inner, 0};
        }
        if (t.text == "[") {
          consume();
          if (is_punct("]")) {
            consume();
            return {Term::nil(), 0};
          }
          std::vector<Term> elems;
          elems.push_back(parse(999));
          while (is_punct(",")) {
            consume();
            elems.push_back(parse(999));
          }
          Term tail = Term::nil();
          if (is_punct("|")) {
            consume();
            tail = parse(999);
          }
          expect("]");
          return {Term::list(std::move(elems), std::move(tail)), 0};
        }
        fail("unexpected punctuation");
      case Tok::Atom:
      case Tok::QAtom: {
        consume();
        if (is_punct("(") && !cur_.layout_before) {
          consume();
          std::vector<Term> args;
          args.push_back(parse(999));
          while (is_punct(",")) {
            consume();
            args.push_back(parse(999));
          }
          expect(")");
          return {Term::compound(t.text, std::move(args)), 0};
        }
        if (t.kind == Tok::Atom) {
          if (t.text == "-" && !cur_.layout_before &&
              (cur_.kind == Tok::Int || cur_.kind == Tok::Float)) {
            Token n = cur_;
            consume();
            if (n.kind == Tok::Int) return {Term::integer(-n.ival), 0};
            return {Term::real(-n.fval), 0};
          }
          if (auto op = prefix_op(t.text); op && starts_term()) {
            // An operator atom followed by an infix operator is an operand.
            bool operand = false;
            if (auto nm = infix_name(); nm && infix_op(*nm) &&
                                        cur_.kind != Tok::QAtom &&
                                        !prefix_op(*nm))
              operand = true;
            if (!operand) {
              int p = op->priority;
              if (p > max_prec) p = 999;
              int ap = op->type == OpType::fy ? p : p - 1;
              Term arg = parse(ap);
              return {Term::compound(t.text, {std::move(arg)}), p};
            }
          }
        }
        return {Term::atom(t.text), 0};
      }
      case Tok::End:
        fail("unexpected end of clause");
      case Tok::Eof:
        fail("expected a term");
    }
    fail("expected a term");
  }

  Term variable(const std::string& name) {
    if (name == "_") return Term::var("_", next_id_++);
    auto it = vars_.find(name);
    if (it != vars_.end()) return it->second;
    Term v = Term::var(name, next_id_++);
    vars_.emplace(name, v);
    return v;
  }

  Lexer lex_;
  Token cur_;
  std::uint64_t next_id_;
  std::map<std::string, Term> vars_;
};

void flatten_conj(const Term& t, std::vector<Term>& out) {
  if (t.is_compound() && t.as_compound().functor == "," && t.arity() == 2) {
    flatten_conj(t.arg(0), out);
    flatten_conj(t.arg(1), out);
  } else {
    out.push_back(t);
  }
}

class ProgramBuilder {
 public:
  explicit ProgramBuilder(Program& p) : prog_(p) {}

  void clause(const Term& t, int line, int col) {
    Term head = t;
    std::vector<Term> goals;
    if (t.is_compound() && t.as_compound().functor == ":-" && t.arity() == 2) {
      head = t.arg(0);
      flatten_conj(t.arg(1), goals);
    }
    if (!head.is_atom() && !head.is_compound())
      throw ParseError("clause head must be an atom or compound term", line,
                       col);
    if (is_builtin(key_of(head)) || head.functor() == "," ||
        head.functor() == ":-")
      throw ParseError("cannot redefine builtin " + key_of(head).str(), line,
                       col);
    Clause c;
    c.head = head;
    c.line = line;
    for (auto& g : goals) {
      if (!g.is_atom() && !g.is_compound())
        throw ParseError("body goal must be callable: " + to_string(g), line,
                         col);
      if (g.functor() == "!" || g.functor() == ";")
        throw ParseError("'" + std::string(g.functor()) +
                             "' is not part of the supported subset",
                         line, col);
      c.body.push_back(Literal{classify(g), g, line});
    }
    prog_.upsert(c.key()).clauses.push_back(std::move(c));
  }

  void directive(const Term& d, int line, int col) {
    auto err = [&](const std::string& msg) {
      throw ParseError(msg + " in directive " + to_string(d), line, col);
    };
    std::string_view f = d.functor();
    if (f == "entry" && d.arity() == 1) {
      PredKey k = pred_indicator(d.arg(0), err);
      prog_.add_entry(k);
      declared_.insert(k);
      return;
    }
    if (!d.is_compound() || d.arity() < 2) err("unknown directive");
    PredKey k = pred_indicator(d.arg(0), err);
    declared_.insert(k);
    PredicateDecl& decl = prog_.upsert(k).decl;
    auto dup = [&](const char* what) {
      throw Error(ErrorKind::Input,
                  std::to_string(line) + ":" + std::to_string(col) +
                      ": duplicate " + what + " declaration for " + k.str());
    };
    if (f == "mode" && d.arity() == 2) {
      if (decl.modes_declared) dup("mode");
      for (const auto& m : list_items(d.arg(1), err)) {
        if (m.is_atom() && m.as_atom().name == "in") {
          decl.modes.push_back(Mode::In);
        } else if (m.is_atom() && m.as_atom().name == "out") {
          decl.modes.push_back(Mode::Out);
        } else {
          err("mode must be 'in' or 'out'");
        }
      }
      decl.modes_declared = true;
    } else if (f == "measure" && d.arity() == 2) {
      if (decl.measures_declared) dup("measure");
      for (const auto& m : list_items(d.arg(1), err)) {
        if (!m.is_atom()) err("measure must be an atom");
        const auto& n = m.as_atom().name;
        if (n == "length") decl.measures.push_back(Measure::ListLength);
        else if (n == "size") decl.measures.push_back(Measure::TermSize);
        else if (n == "depth") decl.measures.push_back(Measure::TermDepth);
        else if (n == "int") decl.measures.push_back(Measure::IntValue);
        else if (n == "void") decl.measures.push_back(Measure::None);
        else err("unknown measure '" + n + "'");
      }
      decl.measures_declared = true;
    } else if (f == "sols" && d.arity() == 2) {
      if (decl.sols) dup("sols");
      decl.sols = d.arg(1);
    } else if (f == "mutex" && d.arity() == 2) {
      if (decl.mutex_groups) dup("mutex");
      std::vector<std::vector<int>> groups;
      for (const auto& g : list_items(d.arg(1), err)) {
        std::vector<int> grp;
        for (const auto& i : list_items(g, err)) {
          if (!i.is_int() || i.as_int() < 1) err("clause index must be >= 1");
          grp.push_back(static_cast<int>(i.as_int()) - 1);
        }
        groups.push_back(std::move(grp));
      }
      decl.mutex_groups = std::move(groups);
    } else if (f == "trust_cost" && d.arity() == 3) {
      std::string metric = to_string(d.arg(1));
      if (decl.trust_cost.count(metric)) dup("trust_cost");
      decl.trust_cost.emplace(metric, d.arg(2));
    } else if (f == "size" && d.arity() == 3) {
      if (!d.arg(1).is_int()) err("argument index must be an integer");
      int a = static_cast<int>(d.arg(1).as_int());
      if (decl.out_size.count(a)) dup("size");
      decl.out_size.emplace(a, d.arg(2));
    } else if (f == "size" && d.arity() == 5) {
      SizeHint h;
      for (int i = 1; i <= 3; ++i)
        if (!d.arg(i).is_int()) err("size hint indices must be integers");
      h.clause = static_cast<int>(d.arg(1).as_int());
      h.literal = static_cast<int>(d.arg(2).as_int());
      h.arg = static_cast<int>(d.arg(3).as_int());
      h.expr = d.arg(4);
      decl.size_hints.push_back(std::move(h));
    } else {
      err("unknown directive");
    }
  }

  void finish() {
    // A declaration naming name/N where only name/M clauses exist.
    for (const auto& k : declared_) {
      const auto* p = prog_.find(k);
      if (p && (!p->clauses.empty() || p->decl.trusted())) continue;
      for (const auto& [other, op] : prog_.predicates()) {
        if (other.name == k.name && other.arity != k.arity &&
            !op.clauses.empty())
          throw Error(ErrorKind::Input,
                      "arity mismatch: declaration for " + k.str() +
                          " but clauses define " + other.str());
      }
    }
  }

 private:
  template <class Err>
  static PredKey pred_indicator(const Term& t, Err&& err) {
    if (!t.is_compound() || t.as_compound().functor != "/" || t.arity() != 2 ||
        !t.arg(0).is_atom() || !t.arg(1).is_int())
      err("expected a predicate indicator name/arity");
    return PredKey{t.arg(0).as_atom().name, static_cast<int>(t.arg(1).as_int())};
  }

  template <class Err>
  static std::vector<Term> list_items(const Term& t, Err&& err) {
    std::vector<Term> out;
    const Term* cur = &t;
    while (cur->is_cons()) {
      out.push_back(cur->arg(0));
      cur = &cur->arg(1);
    }
    if (!cur->is_nil()) err("expected a proper list");
    return out;
  }

  Program& prog_;
  std::set<PredKey> declared_;
};

}  // namespace

Program parse_program(std::string_view source) {
  Program prog;
  ProgramBuilder builder(prog);
  Parser parser(source, 1);
  while (!parser.at_eof()) {
    int line = parser.peek().line, col = parser.peek().col;
    Term t = parser.read_clause();
    if (t.is_compound() && t.as_compound().functor == ":-" && t.arity() == 1) {
      builder.directive(t.arg(0), line, col);
    } else {
      builder.clause(t, line, col);
    }
  }
  builder.finish();
  return prog;
}

ParsedTerm parse_term(std::string_view text, std::uint64_t first_var_id) {
  Parser parser(text, first_var_id);
  if (parser.at_eof()) parser.fail("expected a term");
  Term t = parser.read_single();
  return ParsedTerm{std::move(t), parser.vars()};
}

std::string print_program(const Program& p) {
  std::ostringstream os;
  for (const auto& e : p.entry_points()) os << ":- entry(" << e.str() << ").\n";
  auto pi = [](const PredKey& k) { return to_string(Term::compound("/", {Term::atom(k.name), Term::integer(k.arity)})); };
  for (const auto& [k, pred] : p.predicates()) {
    const auto& d = pred.decl;
    if (d.modes_declared) {
      os << ":- mode(" << pi(k) << ", [";
      for (std::size_t i = 0; i < d.modes.size(); ++i)
        os << (i ? "," : "") << to_string(d.modes[i]);
      os << "]).\n";
    }
    if (d.measures_declared) {
      os << ":- measure(" << pi(k) << ", [";
      for (std::size_t i = 0; i < d.measures.size(); ++i)
        os << (i ? "," : "") << to_string(d.measures[i]);
      os << "]).\n";
    }
    if (d.sols) os << ":- sols(" << pi(k) << ", " << to_string(*d.sols) << ").\n";
    if (d.mutex_groups) {
      os << ":- mutex(" << pi(k) << ", [";
      for (std::size_t g = 0; g < d.mutex_groups->size(); ++g) {
        os << (g ? "," : "") << '[';
        const auto& grp = (*d.mutex_groups)[g];
        for (std::size_t i = 0; i < grp.size(); ++i)
          os << (i ? "," : "") << grp[i] + 1;
        os << ']';
      }
      os << "]).\n";
    }
    for (const auto& [metric, expr] : d.trust_cost)
      os << ":- trust_cost(" << pi(k) << ", " << metric << ", "
         << to_string(expr) << ").\n";
    for (const auto& [arg, expr] : d.out_size)
      os << ":- size(" << pi(k) << ", " << arg << ", " << to_string(expr)
         << ").\n";
    for (const auto& h : d.size_hints)
      os << ":- size(" << pi(k) << ", " << h.clause << ", " << h.literal
         << ", " << h.arg << ", " << to_string(h.expr) << ").\n";
  }
  for (const auto& [k, pred] : p.predicates()) {
    for (const auto& c : pred.clauses) {
      os << to_string(c.head);
      if (!c.body.empty()) {
        os << " :-\n";
        for (std::size_t i = 0; i < c.body.size(); ++i) {
          os << "    ";
          os << to_string(c.body[i].goal) << (i + 1 < c.body.size() ? ",\n" : "");
        }
      }
      os << ".\n";
    }
  }
  return os.str();
}

}  // namespace costcal::lang
