#include "costcal/vm/machine.hpp"

#include <cmath>
#include <type_traits>
#include <limits>
#include <unordered_map>

#include "costcal/error.hpp"
#include "costcal/vm/exclusive.hpp"

namespace costcal::vm {

using analysis::Metric;
using lang::Term;

namespace {

// ------------------------------------------------------------- heap cells

enum class Tag : std::uint8_t { Ref, Atom, Int, Float, Str, Functor };

struct Cell {
  Tag tag = Tag::Ref;
  std::uint32_t arity = 0;  // Functor
  std::int64_t val = 0;     // Ref/Str: heap index; Atom/Functor: atom id; Int
  double f = 0;             // Float
};

constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();

// ---------------------------------------------------------- clause code

enum class Op : std::uint8_t {
  Add, Sub, Mul, Div, IntDiv, Mod, Rem, Pow, Min, Max, Neg, Abs, None
};

enum class NodeKind : std::uint8_t { Var, Atom, Int, Float, Struct };

struct Node {
  NodeKind kind = NodeKind::Atom;
  std::uint32_t arity = 0;
  std::int64_t val = 0;     // slot, atom id, or integer
  double f = 0;
  std::uint32_t first = 0;  // Struct: children are kids[first .. first+arity)
  std::int64_t symbols = 1; // symbol count of the subtree
  Op op = Op::None;         // Struct: arithmetic operator, if any
  int counter = -1;         // Struct: counter id of that operator
};

enum class BuiltinCode : std::uint8_t { Is, Eq, Ne, Lt, Gt, Le, Ge, True };

struct Lit {
  bool call = true;
  int pred = -1;  // Call
  BuiltinCode builtin = BuiltinCode::True;
  int builtin_counter = -1;
  std::vector<std::uint32_t> args;  // root nodes
};

struct CClause {
  std::vector<Node> nodes;
  std::vector<std::uint32_t> kids;
  std::vector<std::uint32_t> head;  // root nodes per head argument
  std::vector<Lit> body;
  std::uint32_t nvars = 0;
};

struct CPred {
  lang::PredKey key;
  std::vector<lang::Mode> modes;  // empty when undeclared
  std::vector<CClause> clauses;
  bool defined = false;
};

struct Num {
  bool is_float = false;
  std::int64_t i = 0;
  double f = 0;
  double as_double() const { return is_float ? f : static_cast<double>(i); }
};

// ------------------------------------------------------------ counters

// Counter ids 0..5 are the head metrics in CostModel::all_head() order.
enum : int { kStep, kNargs, kGiunif, kGounif, kViunif, kVounif, kFixed };

struct NullCounter {
  struct Snapshot {};
  void add(int, std::int64_t) {}
  Snapshot snapshot() const { return {}; }
  void restore(const Snapshot&) {}
};

struct Counting {
  using Snapshot = std::vector<std::int64_t>;
  std::vector<std::int64_t> counts;
  void add(int id, std::int64_t n) {
    auto i = static_cast<std::size_t>(id);
    if (i >= counts.size()) counts.resize(i + 1, 0);
    counts[i] += n;
  }
  Snapshot snapshot() const { return counts; }
  void restore(const Snapshot& s) { counts = s; }
};

[[noreturn]] void runtime(const std::string& msg) {
  throw Error(ErrorKind::Runtime, msg);
}

std::int64_t checked(long double v, const char* op) {
  if (!(v >= static_cast<long double>(std::numeric_limits<std::int64_t>::min()) &&
        v <= static_cast<long double>(std::numeric_limits<std::int64_t>::max())))
    runtime(std::string("integer overflow in ") + op);
  return static_cast<std::int64_t>(v);
}

Num apply(Op op, const Num& a, const Num& b) {
  bool fl = a.is_float || b.is_float;
  auto mk_f = [](double x) { return Num{true, 0, x}; };
  auto mk_i = [](std::int64_t x) { return Num{false, x, 0}; };
  auto need_int = [&](const char* name) {
    if (fl) runtime(std::string("type error: ") + name + " expects integers");
  };
  switch (op) {
    case Op::Add:
      if (fl) return mk_f(a.as_double() + b.as_double());
      return mk_i(checked(static_cast<long double>(a.i) + b.i, "+"));
    case Op::Sub:
      if (fl) return mk_f(a.as_double() - b.as_double());
      return mk_i(checked(static_cast<long double>(a.i) - b.i, "-"));
    case Op::Mul:
      if (fl) return mk_f(a.as_double() * b.as_double());
      return mk_i(checked(static_cast<long double>(a.i) * b.i, "*"));
    case Op::Div:
      if (b.as_double() == 0) runtime("division by zero");
      if (!fl && a.i % b.i == 0) return mk_i(a.i / b.i);
      return mk_f(a.as_double() / b.as_double());
    case Op::IntDiv:
      need_int("//");
      if (b.i == 0) runtime("division by zero");
      return mk_i(a.i / b.i);
    case Op::Mod: {
      need_int("mod");
      if (b.i == 0) runtime("division by zero");
      std::int64_t m = a.i % b.i;
      if (m != 0 && ((m < 0) != (b.i < 0))) m += b.i;
      return mk_i(m);
    }
    case Op::Rem:
      need_int("rem");
      if (b.i == 0) runtime("division by zero");
      return mk_i(a.i % b.i);
    case Op::Pow:
      if (fl || b.i < 0) return mk_f(std::pow(a.as_double(), b.as_double()));
      {
        long double r = 1;
        for (std::int64_t k = 0; k < b.i; ++k) {
          r *= a.i;
          if (std::fabs(static_cast<double>(r)) > 9.3e18) runtime("integer overflow in ^");
        }
        return mk_i(static_cast<std::int64_t>(r));
      }
    case Op::Min:
      if (fl) return a.as_double() <= b.as_double() ? a : b;
      return a.i <= b.i ? a : b;
    case Op::Max:
      if (fl) return a.as_double() >= b.as_double() ? a : b;
      return a.i >= b.i ? a : b;
    case Op::Neg:
      return a.is_float ? mk_f(-a.f) : mk_i(checked(-static_cast<long double>(a.i), "-"));
    case Op::Abs:
      return a.is_float ? mk_f(std::fabs(a.f)) : mk_i(a.i < 0 ? -a.i : a.i);
    case Op::None: break;
  }
  runtime("bad arithmetic operator");
}

Op op_of(std::string_view name, std::uint32_t arity) {
  if (arity == 1) {
    if (name == "-") return Op::Neg;
    if (name == "abs") return Op::Abs;
    return Op::None;
  }
  if (arity != 2) return Op::None;
  if (name == "+") return Op::Add;
  if (name == "-") return Op::Sub;
  if (name == "*") return Op::Mul;
  if (name == "/") return Op::Div;
  if (name == "//") return Op::IntDiv;
  if (name == "mod") return Op::Mod;
  if (name == "rem") return Op::Rem;
  if (name == "^" || name == "**") return Op::Pow;
  if (name == "min") return Op::Min;
  if (name == "max") return Op::Max;
  return Op::None;
}

int compare(const Num& a, const Num& b) {
  if (!a.is_float && !b.is_float) return a.i < b.i ? -1 : (a.i > b.i ? 1 : 0);
  double x = a.as_double(), y = b.as_double();
  return x < y ? -1 : (x > y ? 1 : 0);
}

}  // namespace

// ---------------------------------------------------------------- engine

class Engine {
 public:
  Engine(const lang::Program& p, MachineOptions opts) : opts_(opts) {
    for (const auto& [k, pred] : p.predicates()) pred_index(k);
    for (const auto& [k, pred] : p.predicates()) {
      std::vector<CClause> clauses;
      for (const auto& c : pred.clauses) clauses.push_back(compile(c));
      CPred& cp = preds_[static_cast<std::size_t>(pred_index(k))];
      cp.defined = !pred.clauses.empty();
      if (pred.decl.has_modes() &&
          static_cast<int>(pred.decl.modes.size()) == k.arity)
        cp.modes = pred.decl.modes;
      cp.clauses = std::move(clauses);
    }
    counter_.counts.assign(metrics_.size() + kFixed, 0);
    heap_.reserve(1 << 16);
  }

  // Counting ------------------------------------------------------------

  SolveResult solve(const Term& goal) {
    CountingGuard guard;
    reset_all();
    std::unordered_map<std::uint64_t, std::uint32_t> vars;
    auto [pred, args] = load_goal(goal, vars);
    counter_.counts.assign(metrics_.size() + kFixed, 0);
    SolveResult r;
    r.success = call<Counting>(counter_, pred, args.data(), 0);
    if (r.success) {
      std::map<std::uint64_t, std::string> names;
      lang::for_each_var(goal, [&](const lang::Var& v) { names[v.id] = v.name; });
      for (const auto& [id, addr] : vars) {
        const std::string& n = names[id];
        if (n.empty() || n[0] == '_') continue;
        r.bindings.emplace(n, read_back(addr));
      }
    }
    r.counts = export_counts();
    reset_all();
    return r;
  }

  bool run(const Term& goal) {
    CountingGuard guard;
    reset_all();
    std::unordered_map<std::uint64_t, std::uint32_t> vars;
    auto [pred, args] = load_goal(goal, vars);
    NullCounter nc;
    bool ok = call<NullCounter>(nc, pred, args.data(), 0);
    reset_all();
    return ok;
  }

  // Timing --------------------------------------------------------------

  void prepare(const Term& goal) {
    reset_all();
    std::unordered_map<std::uint64_t, std::uint32_t> vars;
    auto [pred, args] = load_goal(goal, vars);
    prepared_pred_ = pred;
    prepared_args_ = std::move(args);
    prepared_heap_ = heap_.size();
  }

  void reset_prepared() {
    untrail(0);
    heap_.resize(prepared_heap_);
    frames_.clear();
  }

  bool run_prepared() {
    if (prepared_pred_ < 0) runtime("no prepared goal");
    reset_prepared();
    NullCounter nc;
    return call<NullCounter>(nc, prepared_pred_, prepared_args_.data(), 0);
  }

 private:
  // Compilation -----------------------------------------------------------

  int pred_index(const lang::PredKey& k) {
    auto it = pred_ids_.find(k);
    if (it != pred_ids_.end()) return it->second;
    int id = static_cast<int>(preds_.size());
    pred_ids_.emplace(k, id);
    preds_.push_back(CPred{k, {}, {}, false});
    return id;
  }

  std::int64_t atom_id(const std::string& name) {
    auto it = atom_ids_.find(name);
    if (it != atom_ids_.end()) return it->second;
    auto id = static_cast<std::int64_t>(atoms_.size());
    atoms_.push_back(name);
    atom_ids_.emplace(name, id);
    return id;
  }

  int metric_id(const Metric& m) {
    for (std::size_t i = 0; i < metrics_.size(); ++i)
      if (metrics_[i] == m) return static_cast<int>(i) + kFixed;
    metrics_.push_back(m);
    return static_cast<int>(metrics_.size()) - 1 + kFixed;
  }

  int op_counter(std::int64_t functor_atom, std::uint32_t arity) {
    auto key = std::make_pair(functor_atom, arity);
    auto it = op_counters_.find(key);
    if (it != op_counters_.end()) return it->second;
    int id = metric_id(Metric::arith(atoms_[static_cast<std::size_t>(functor_atom)],
                                     static_cast<int>(arity)));
    op_counters_.emplace(key, id);
    return id;
  }

  std::uint32_t compile_term(const Term& t, CClause& c,
                             std::unordered_map<std::uint64_t, std::uint32_t>& slots) {
    Node n;
    if (t.is_var()) {
      auto [it, fresh] = slots.emplace(t.as_var().id, c.nvars);
      if (fresh) ++c.nvars;
      n.kind = NodeKind::Var;
      n.val = it->second;
    } else if (t.is_atom()) {
      n.kind = NodeKind::Atom;
      n.val = atom_id(t.as_atom().name);
    } else if (t.is_int()) {
      n.kind = NodeKind::Int;
      n.val = t.as_int();
    } else if (t.is_float()) {
      n.kind = NodeKind::Float;
      n.f = t.as_float();
    } else {
      const auto& cp = t.as_compound();
      std::vector<std::uint32_t> kids;
      for (const auto& a : cp.args) kids.push_back(compile_term(a, c, slots));
      n.kind = NodeKind::Struct;
      n.arity = static_cast<std::uint32_t>(kids.size());
      n.val = atom_id(cp.functor);
      n.first = static_cast<std::uint32_t>(c.kids.size());
      for (auto k : kids) {
        c.kids.push_back(k);
        n.symbols += c.nodes[k].symbols;
      }
    }
    c.nodes.push_back(n);
    return static_cast<std::uint32_t>(c.nodes.size() - 1);
  }

  CClause compile(const lang::Clause& cl) {
    CClause c;
    std::unordered_map<std::uint64_t, std::uint32_t> slots;
    for (int i = 0; i < cl.head.arity(); ++i)
      c.head.push_back(compile_term(cl.head.arg(static_cast<std::size_t>(i)), c, slots));
    for (const auto& l : cl.body) {
      Lit L;
      auto k = l.key();
      for (int i = 0; i < k.arity; ++i)
        L.args.push_back(compile_term(l.goal.arg(static_cast<std::size_t>(i)), c, slots));
      if (l.kind == lang::LiteralKind::Call) {
        L.call = true;
        L.pred = pred_index(k);
      } else {
        L.call = false;
        L.builtin_counter = metric_id(Metric::builtin(k.name, k.arity));
        if (k.name == "is") L.builtin = BuiltinCode::Is;
        else if (k.name == "=:=") L.builtin = BuiltinCode::Eq;
        else if (k.name == "=\\=") L.builtin = BuiltinCode::Ne;
        else if (k.name == "<") L.builtin = BuiltinCode::Lt;
        else if (k.name == ">") L.builtin = BuiltinCode::Gt;
        else if (k.name == "=<") L.builtin = BuiltinCode::Le;
        else if (k.name == ">=") L.builtin = BuiltinCode::Ge;
        else L.builtin = BuiltinCode::True;
      }
      c.body.push_back(std::move(L));
    }
    for (const auto& L : c.body)
      if (!L.call)
        for (auto a : L.args) register_ops(c, a);
    return c;
  }

  void register_ops(CClause& c, std::uint32_t n) {
    Node& node = c.nodes[n];
    if (node.kind != NodeKind::Struct) return;
    node.op = op_of(atoms_[static_cast<std::size_t>(node.val)], node.arity);
    if (node.op != Op::None) node.counter = op_counter(node.val, node.arity);
    for (std::uint32_t i = 0; i < node.arity; ++i) register_ops(c, c.kids[node.first + i]);
  }

  // Heap ------------------------------------------------------------------

  std::uint32_t push(Cell c) {
    heap_.push_back(c);
    return static_cast<std::uint32_t>(heap_.size() - 1);
  }
  std::uint32_t push_unbound() {
    auto a = static_cast<std::uint32_t>(heap_.size());
    heap_.push_back(Cell{Tag::Ref, 0, a, 0});
    return a;
  }

  std::uint32_t deref(std::uint32_t a) const {
    for (;;) {
      const Cell& c = heap_[a];
      if (c.tag != Tag::Ref || static_cast<std::uint32_t>(c.val) == a) return a;
      a = static_cast<std::uint32_t>(c.val);
    }
  }
  bool unbound(std::uint32_t a) const {
    return heap_[a].tag == Tag::Ref && static_cast<std::uint32_t>(heap_[a].val) == a;
  }

  void bind(std::uint32_t var, Cell value) {
    trail_.push_back(var);
    heap_[var] = value;
  }
  void untrail(std::size_t mark) {
    while (trail_.size() > mark) {
      auto a = trail_.back();
      trail_.pop_back();
      heap_[a] = Cell{Tag::Ref, 0, a, 0};
    }
  }

  // The value stored when binding something to the term at `a` (deref'd).
  Cell ref_to(std::uint32_t a) const {
    const Cell& c = heap_[a];
    if (c.tag == Tag::Atom || c.tag == Tag::Int || c.tag == Tag::Float || c.tag == Tag::Str)
      return c;
    return Cell{Tag::Ref, 0, a, 0};
  }

  bool unify(std::uint32_t a, std::uint32_t b) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> todo{{a, b}};
    while (!todo.empty()) {
      auto [x, y] = todo.back();
      todo.pop_back();
      x = deref(x);
      y = deref(y);
      if (x == y) continue;
      if (unbound(x)) { bind(x, ref_to(y)); continue; }
      if (unbound(y)) { bind(y, ref_to(x)); continue; }
      const Cell& cx = heap_[x];
      const Cell& cy = heap_[y];
      if (cx.tag != cy.tag) return false;
      switch (cx.tag) {
        case Tag::Atom:
        case Tag::Int:
          if (cx.val != cy.val) return false;
          break;
        case Tag::Float:
          if (cx.f != cy.f) return false;
          break;
        case Tag::Str: {
          auto fx = static_cast<std::uint32_t>(cx.val);
          auto fy = static_cast<std::uint32_t>(cy.val);
          if (fx == fy) break;
          if (heap_[fx].val != heap_[fy].val || heap_[fx].arity != heap_[fy].arity)
            return false;
          for (std::uint32_t i = 1; i <= heap_[fx].arity; ++i) todo.emplace_back(fx + i, fy + i);
          break;
        }
        default: return false;
      }
    }
    return true;
  }

  std::uint32_t& slot(std::size_t frame, const Node& n) {
    return frames_[frame + static_cast<std::size_t>(n.val)];
  }

  // Writes the instance of template node `n` into heap cell `at`.
  void fill(std::uint32_t at, const CClause& c, std::uint32_t n, std::size_t frame) {
    const Node& node = c.nodes[n];
    switch (node.kind) {
      case NodeKind::Var: {
        auto& s = slot(frame, node);
        if (s == kUnset) {
          heap_[at] = Cell{Tag::Ref, 0, at, 0};
          s = at;
        } else {
          heap_[at] = ref_to(deref(s));
        }
        return;
      }
      case NodeKind::Atom: heap_[at] = Cell{Tag::Atom, 0, node.val, 0}; return;
      case NodeKind::Int: heap_[at] = Cell{Tag::Int, 0, node.val, 0}; return;
      case NodeKind::Float: heap_[at] = Cell{Tag::Float, 0, 0, node.f}; return;
      case NodeKind::Struct: {
        auto f = static_cast<std::uint32_t>(heap_.size());
        heap_.push_back(Cell{Tag::Functor, node.arity, node.val, 0});
        heap_.resize(heap_.size() + node.arity);
        for (std::uint32_t i = 0; i < node.arity; ++i)
          fill(f + 1 + i, c, c.kids[node.first + i], frame);
        heap_[at] = Cell{Tag::Str, 0, f, 0};
        return;
      }
    }
  }

  std::uint32_t instantiate(const CClause& c, std::uint32_t n, std::size_t frame) {
    const Node& node = c.nodes[n];
    if (node.kind == NodeKind::Var) {
      auto& s = slot(frame, node);
      if (s != kUnset) return s;
    }
    auto at = push_unbound();
    fill(at, c, n, frame);
    return at;
  }

  // Unifies template node `n` with the heap term at `a`, tallying one
  // symbol per template node into `metric`.
  template <class C>
  bool unify_head(C& ctr, int metric, const CClause& c, std::uint32_t n,
                  std::uint32_t a, std::size_t frame) {
    const Node& node = c.nodes[n];
    if (node.kind == NodeKind::Var) {
      ctr.add(metric, 1);
      auto& s = slot(frame, node);
      if (s == kUnset) {
        s = a;
        return true;
      }
      return unify(s, a);
    }
    a = deref(a);
    if (unbound(a)) {
      ctr.add(metric, node.symbols);
      auto at = push_unbound();
      fill(at, c, n, frame);
      bind(a, heap_[at]);
      return true;
    }
    ctr.add(metric, 1);
    const Cell& cell = heap_[a];
    switch (node.kind) {
      case NodeKind::Atom: return cell.tag == Tag::Atom && cell.val == node.val;
      case NodeKind::Int: return cell.tag == Tag::Int && cell.val == node.val;
      case NodeKind::Float: return cell.tag == Tag::Float && cell.f == node.f;
      case NodeKind::Struct: {
        if (cell.tag != Tag::Str) return false;
        auto f = static_cast<std::uint32_t>(cell.val);
        if (heap_[f].val != node.val || heap_[f].arity != node.arity) return false;
        for (std::uint32_t i = 0; i < node.arity; ++i)
          if (!unify_head(ctr, metric, c, c.kids[node.first + i], f + 1 + i, frame))
            return false;
        return true;
      }
      default: return false;
    }
  }

  // Arithmetic ------------------------------------------------------------

  template <class C>
  Num eval_heap(C& ctr, std::uint32_t a) {
    a = deref(a);
    const Cell& cell = heap_[a];
    switch (cell.tag) {
      case Tag::Int: return Num{false, cell.val, 0};
      case Tag::Float: return Num{true, 0, cell.f};
      case Tag::Ref: runtime("arithmetic on unbound variable");
      case Tag::Atom:
        runtime("type error: atom " + atoms_[static_cast<std::size_t>(cell.val)] +
                " is not a number");
      case Tag::Str: {
        auto f = static_cast<std::uint32_t>(cell.val);
        const Cell& fc = heap_[f];
        Op op = op_of(atoms_[static_cast<std::size_t>(fc.val)], fc.arity);
        if (op == Op::None)
          runtime("type error: " + atoms_[static_cast<std::size_t>(fc.val)] + "/" +
                  std::to_string(fc.arity) + " is not an arithmetic operator");
        if constexpr (std::is_same_v<C, Counting>) ctr.add(op_counter(fc.val, fc.arity), 1);
        Num x = eval_heap(ctr, f + 1);
        Num y = fc.arity == 2 ? eval_heap(ctr, f + 2) : Num{};
        return apply(op, x, y);
      }
      default: runtime("bad arithmetic term");
    }
  }

  template <class C>
  Num eval_node(C& ctr, const CClause& c, std::uint32_t n, std::size_t frame) {
    const Node& node = c.nodes[n];
    switch (node.kind) {
      case NodeKind::Int: return Num{false, node.val, 0};
      case NodeKind::Float: return Num{true, 0, node.f};
      case NodeKind::Var: {
        auto s = slot(frame, node);
        if (s == kUnset) runtime("arithmetic on unbound variable");
        return eval_heap(ctr, s);
      }
      case NodeKind::Atom:
        runtime("type error: atom " + atoms_[static_cast<std::size_t>(node.val)] +
                " is not a number");
      case NodeKind::Struct: {
        if (node.op == Op::None)
          runtime("type error: " + atoms_[static_cast<std::size_t>(node.val)] + "/" +
                  std::to_string(node.arity) + " is not an arithmetic operator");
        ctr.add(node.counter, 1);
        Num x = eval_node(ctr, c, c.kids[node.first], frame);
        Num y = node.arity == 2 ? eval_node(ctr, c, c.kids[node.first + 1], frame) : Num{};
        return apply(node.op, x, y);
      }
    }
    runtime("bad arithmetic term");
  }

  Cell num_cell(const Num& v) const {
    return v.is_float ? Cell{Tag::Float, 0, 0, v.f} : Cell{Tag::Int, 0, v.i, 0};
  }

  template <class C>
  bool builtin(C& ctr, const CClause& c, const Lit& L, std::size_t frame) {
    ctr.add(L.builtin_counter, 1);
    switch (L.builtin) {
      case BuiltinCode::True: return true;
      case BuiltinCode::Is: {
        Num v = eval_node(ctr, c, L.args[1], frame);
        const Node& lhs = c.nodes[L.args[0]];
        if (lhs.kind == NodeKind::Var) {
          auto& s = slot(frame, lhs);
          if (s == kUnset) {
            s = push(num_cell(v));
            return true;
          }
          auto a = deref(s);
          if (unbound(a)) {
            bind(a, num_cell(v));
            return true;
          }
          const Cell& cell = heap_[a];
          if (v.is_float) return cell.tag == Tag::Float && cell.f == v.f;
          return cell.tag == Tag::Int && cell.val == v.i;
        }
        if (lhs.kind == NodeKind::Int) return !v.is_float && v.i == lhs.val;
        if (lhs.kind == NodeKind::Float) return v.is_float && v.f == lhs.f;
        return false;
      }
      default: break;
    }
    Num x = eval_node(ctr, c, L.args[0], frame);
    Num y = eval_node(ctr, c, L.args[1], frame);
    int r = compare(x, y);
    switch (L.builtin) {
      case BuiltinCode::Eq: return r == 0;
      case BuiltinCode::Ne: return r != 0;
      case BuiltinCode::Lt: return r < 0;
      case BuiltinCode::Gt: return r > 0;
      case BuiltinCode::Le: return r <= 0;
      case BuiltinCode::Ge: return r >= 0;
      default: return false;
    }
  }

  // Resolution ------------------------------------------------------------

  void check_modes(const CPred& p, const std::uint32_t* args) {
    for (std::size_t i = 0; i < p.modes.size(); ++i) {
      bool free = unbound(deref(args[i]));
      if (p.modes[i] == lang::Mode::In && free)
        runtime("mode violation: argument " + std::to_string(i + 1) + " of " +
                p.key.str() + " is declared in but unbound");
      if (p.modes[i] == lang::Mode::Out && !free)
        runtime("mode violation: argument " + std::to_string(i + 1) + " of " +
                p.key.str() + " is declared out but bound");
    }
  }

  template <class C>
  bool call(C& ctr, int pred, const std::uint32_t* args, int depth) {
    if (depth > opts_.max_depth)
      runtime("depth limit exceeded (" + std::to_string(opts_.max_depth) + ")");
    const CPred& p = preds_[static_cast<std::size_t>(pred)];
    if (!p.defined) runtime("unknown predicate " + p.key.str());
    if (opts_.check_modes) check_modes(p, args);
    const auto arity = static_cast<std::size_t>(p.key.arity);
    for (const CClause& c : p.clauses) {
      const std::size_t heap_mark = heap_.size();
      const std::size_t trail_mark = trail_.size();
      const std::size_t frame = frames_.size();
      auto snap = ctr.snapshot();
      frames_.resize(frame + c.nvars, kUnset);
      bool ok = true;
      ctr.add(kStep, 1);
      ctr.add(kNargs, static_cast<std::int64_t>(arity));
      for (std::size_t i = 0; ok && i < arity; ++i) {
        bool in = p.modes.empty() || p.modes[i] == lang::Mode::In;
        bool var = c.nodes[c.head[i]].kind == NodeKind::Var;
        int metric = var ? (in ? kViunif : kVounif) : (in ? kGiunif : kGounif);
        ok = unify_head(ctr, metric, c, c.head[i], args[i], frame);
      }
      for (std::size_t li = 0; ok && li < c.body.size(); ++li) {
        const Lit& L = c.body[li];
        if (L.call) {
          std::uint32_t local[16];
          std::vector<std::uint32_t> big;
          std::uint32_t* a = local;
          if (L.args.size() > 16) {
            big.resize(L.args.size());
            a = big.data();
          }
          for (std::size_t i = 0; i < L.args.size(); ++i) a[i] = instantiate(c, L.args[i], frame);
          ok = call(ctr, L.pred, a, depth + 1);
        } else {
          ok = builtin(ctr, c, L, frame);
        }
      }
      frames_.resize(frame);
      if (ok) return true;
      untrail(trail_mark);
      heap_.resize(heap_mark);
      ctr.restore(snap);
    }
    return false;
  }

  // Goal loading and read-back ----------------------------------------------

  std::uint32_t load(const Term& t, std::unordered_map<std::uint64_t, std::uint32_t>& vars) {
    if (t.is_var()) {
      auto it = vars.find(t.as_var().id);
      if (it != vars.end()) return it->second;
      auto a = push_unbound();
      vars.emplace(t.as_var().id, a);
      return a;
    }
    if (t.is_atom()) return push(Cell{Tag::Atom, 0, atom_id(t.as_atom().name), 0});
    if (t.is_int()) return push(Cell{Tag::Int, 0, t.as_int(), 0});
    if (t.is_float()) return push(Cell{Tag::Float, 0, 0, t.as_float()});
    const auto& cp = t.as_compound();
    std::vector<std::uint32_t> sub;
    for (const auto& a : cp.args) sub.push_back(load(a, vars));
    auto f = push(Cell{Tag::Functor, static_cast<std::uint32_t>(sub.size()),
                       atom_id(cp.functor), 0});
    for (auto s : sub) push(ref_to(deref(s)));
    return push(Cell{Tag::Str, 0, f, 0});
  }

  std::pair<int, std::vector<std::uint32_t>> load_goal(
      const Term& goal, std::unordered_map<std::uint64_t, std::uint32_t>& vars) {
    if (!goal.is_atom() && !goal.is_compound())
      throw Error(ErrorKind::Input, "goal is not callable: " + lang::to_string(goal));
    if (lang::classify(goal) != lang::LiteralKind::Call) return load_builtin_goal(goal, vars);
    auto k = lang::key_of(goal);
    auto it = pred_ids_.find(k);
    if (it == pred_ids_.end() || !preds_[static_cast<std::size_t>(it->second)].defined)
      runtime("unknown predicate " + k.str());
    std::vector<std::uint32_t> args;
    for (int i = 0; i < k.arity; ++i) args.push_back(load(goal.arg(static_cast<std::size_t>(i)), vars));
    return {it->second, std::move(args)};
  }

  // A builtin goal runs as the body of a 0-ary wrapper clause whose
  // variables are those of the goal.
  std::pair<int, std::vector<std::uint32_t>> load_builtin_goal(
      const Term& goal, std::unordered_map<std::uint64_t, std::uint32_t>& vars) {
    std::vector<Term> gv;
    std::map<std::uint64_t, bool> seen;
    lang::for_each_var(goal, [&](const lang::Var& v) {
      if (!seen[v.id]) gv.push_back(Term::var(v.name, v.id));
      seen[v.id] = true;
    });
    lang::Clause c;
    c.head = Term::compound("$query", gv);
    c.body.push_back(lang::Literal{lang::classify(goal), goal, 0});
    CClause cc = compile(c);
    int id = pred_index(lang::key_of(c.head));
    CPred& cp = preds_[static_cast<std::size_t>(id)];
    cp.defined = true;
    cp.modes.clear();
    cp.clauses = {std::move(cc)};
    std::vector<std::uint32_t> args;
    for (const auto& v : gv) args.push_back(load(v, vars));
    return {id, std::move(args)};
  }

  Term read_back(std::uint32_t a) const {
    a = deref(a);
    const Cell& c = heap_[a];
    switch (c.tag) {
      case Tag::Atom: return Term::atom(atoms_[static_cast<std::size_t>(c.val)]);
      case Tag::Int: return Term::integer(c.val);
      case Tag::Float: return Term::real(c.f);
      case Tag::Str: {
        auto f = static_cast<std::uint32_t>(c.val);
        std::vector<Term> args;
        for (std::uint32_t i = 1; i <= heap_[f].arity; ++i) args.push_back(read_back(f + i));
        return Term::compound(atoms_[static_cast<std::size_t>(heap_[f].val)], std::move(args));
      }
      default: return Term::var("_G" + std::to_string(a), 1000000000ULL + a);
    }
  }

  analysis::EventMap export_counts() const {
    analysis::EventMap m;
    const auto head = analysis::CostModel::all_head();
    for (int i = 0; i < kFixed; ++i) m[head[static_cast<std::size_t>(i)]] = counter_.counts[static_cast<std::size_t>(i)];
    for (std::size_t i = 0; i < metrics_.size(); ++i)
      if (i + kFixed < counter_.counts.size())
        if (auto v = counter_.counts[i + kFixed]; v != 0) m[metrics_[i]] = v;
    return m;
  }

  void reset_all() {
    heap_.clear();
    trail_.clear();
    frames_.clear();
    prepared_pred_ = -1;
  }

  MachineOptions opts_;
  std::vector<CPred> preds_;
  std::map<lang::PredKey, int> pred_ids_;
  std::vector<std::string> atoms_;
  std::unordered_map<std::string, std::int64_t> atom_ids_;
  std::vector<Metric> metrics_;
  std::map<std::pair<std::int64_t, std::uint32_t>, int> op_counters_;

  std::vector<Cell> heap_;
  std::vector<std::uint32_t> trail_;
  std::vector<std::uint32_t> frames_;
  Counting counter_;

  int prepared_pred_ = -1;
  std::vector<std::uint32_t> prepared_args_;
  std::size_t prepared_heap_ = 0;
};

// --------------------------------------------------------------- Machine

Machine::Machine(const lang::Program& p, MachineOptions opts)
    : engine_(std::make_unique<Engine>(p, opts)) {}
Machine::~Machine() = default;
Machine::Machine(Machine&&) noexcept = default;
Machine& Machine::operator=(Machine&&) noexcept = default;

SolveResult Machine::solve(const Term& goal) { return engine_->solve(goal); }
bool Machine::run(const Term& goal) { return engine_->run(goal); }

Machine::Prepared Machine::prepare(const Term& goal) {
  engine_->prepare(goal);
  Prepared p;
  p.engine_ = engine_.get();
  return p;
}

bool Machine::Prepared::run() { return engine_->run_prepared(); }
void Machine::Prepared::reset() { engine_->reset_prepared(); }

}  // namespace costcal::vm
