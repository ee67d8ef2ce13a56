// Sources of the calibration programs; kept identical to
// programs/calibration/*.pl (checked by the tests).

#include "costcal/calibrate/suite.hpp"

namespace costcal::calibrate {

const std::vector<ProgramSource>& calibration_sources() {
  static const std::vector<ProgramSource> s = {
      {"nullary", R"pl(% Predicates with no arguments: a binary tree of 0-ary calls, 63 resolutions.
:- entry(z0/0).

z0 :- z1, z1.
z1 :- z2, z2.
z2 :- z3, z3.
z3 :- z4, z4.
z4 :- z5, z5.
z5.
)pl"},
      {"gout", R"pl(% A single fact whose output argument is a ground structure; gounif only.
:- entry(gout/1).
:- mode(gout/1, [out]).
:- measure(gout/1, [void]).

gout(r(f(a, b), [c, d, e], g(h(i), j))).
)pl"},
      {"trav", R"pl(% List traversal with the recursive call last.
:- entry(trav/1).
:- mode(trav/1, [in]).
:- measure(trav/1, [length]).

trav([]).
trav([_|T]) :- trav(T).
)pl"},
      {"travn", R"pl(% List traversal with a call after the recursive one (no last-call shape).
:- entry(travn/1).
:- mode(travn/1, [in]).
:- measure(travn/1, [length]).

travn([]).
travn([_|T]) :- travn(T), done.

done.
)pl"},
      {"viunif", R"pl(% Five input arguments passed through as variables.
:- entry(vi/6).
:- mode(vi/6, [in,in,in,in,in,in]).
:- measure(vi/6, [length,void,void,void,void,void]).

vi([], A, B, C, D, E).
vi([_|T], A, B, C, D, E) :- vi(T, A, B, C, D, E).
)pl"},
      {"vounif", R"pl(% Four output arguments passed through as unbound variables.
:- entry(vo/5).
:- mode(vo/5, [in,out,out,out,out]).
:- measure(vo/5, [length,void,void,void,void]).

vo([], A, B, C, D).
vo([_|T], A, B, C, D) :- vo(T, A, B, C, D).
)pl"},
      {"deep", R"pl(% Input unification against a deeply nested head pattern.
:- entry(deep/1).
:- mode(deep/1, [in]).
:- measure(deep/1, [length]).

deep([]).
deep([f(g(h(_)))|T]) :- deep(T).
)pl"},
      {"flat", R"pl(% Input unification against many flat constants.
:- entry(flat/5).
:- mode(flat/5, [in,in,in,in,in]).
:- measure(flat/5, [length,void,void,void,void]).

flat([], a, b, c, d).
flat([_|T], a, b, c, d) :- flat(T, a, b, c, d).
)pl"},
      {"gol", R"pl(% Builds an output list of constants.
:- entry(gol/2).
:- mode(gol/2, [in,out]).
:- measure(gol/2, [length,length]).

gol([], []).
gol([_|T], [x|R]) :- gol(T, R).
)pl"},
      {"many", R"pl(% A predicate with twelve arguments.
:- entry(many/12).
:- mode(many/12, [in,in,in,in,in,in,in,in,in,in,in,in]).
:- measure(many/12, [length,void,void,void,void,void,void,void,void,void,void,void]).

many([], A, B, C, D, E, F, G, H, I, J, K).
many([_|T], A, B, C, D, E, F, G, H, I, J, K) :- many(T, A, B, C, D, E, F, G, H, I, J, K).
)pl"},
      {"env", R"pl(% Clauses with several body calls sharing variables (environment creation).
:- entry(env/1).
:- mode(env/1, [in]).
:- measure(env/1, [length]).
:- mode(id/2, [in,out]).
:- measure(id/2, [void,void]).

env([]).
env([X|T]) :- id(X, A), id(A, B), id(B, _), env(T).

id(X, X).
)pl"},
  };
  return s;
}

}  // namespace costcal::calibrate
