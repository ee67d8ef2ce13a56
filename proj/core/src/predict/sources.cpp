// Sources of the bundled benchmarks; kept identical to programs/*.pl
// (checked by the tests).

#include "costcal/predict/predict.hpp"

namespace costcal::predict {

const std::vector<calibrate::ProgramSource>& benchmark_sources() {
  static const std::vector<calibrate::ProgramSource> s = {
      {"append", R"pl(% Concatenation of two lists.
:- entry(app/3).
:- mode(app/3, [in,in,out]).
:- measure(app/3, [length,length,length]).

app([], L, L).
app([X|Xs], Ys, [X|Zs]) :- app(Xs, Ys, Zs).
)pl"},
      {"nrev", R"pl(% Naive reverse.
:- entry(nrev/2).
:- mode(nrev/2, [in,out]).
:- measure(nrev/2, [length,length]).
:- mode(app/3, [in,in,out]).
:- measure(app/3, [length,length,length]).

nrev([], []).
nrev([X|Xs], R) :- nrev(Xs, R1), app(R1, [X], R).

app([], L, L).
app([X|Xs], Ys, [X|Zs]) :- app(Xs, Ys, Zs).
)pl"},
      {"hanoi", R"pl(% Towers of Hanoi, collecting the list of moves.
:- entry(hanoi/5).
:- mode(hanoi/5, [in,in,in,in,out]).
:- measure(hanoi/5, [int,void,void,void,length]).
:- mode(app/3, [in,in,out]).
:- measure(app/3, [length,length,length]).

hanoi(1, A, _, C, [mv(A,C)]).
hanoi(N, A, B, C, M) :-
    N > 1,
    N1 is N - 1,
    hanoi(N1, A, C, B, M1),
    hanoi(N1, B, A, C, M2),
    app(M1, [mv(A,C)|M2], M).

app([], L, L).
app([X|Xs], Ys, [X|Zs]) :- app(Xs, Ys, Zs).
)pl"},
      {"palindrome", R"pl(% Builds the palindrome L ++ reverse(L).
:- entry(palindrome/2).
:- mode(palindrome/2, [in,out]).
:- measure(palindrome/2, [length,length]).
:- mode(nrev/2, [in,out]).
:- measure(nrev/2, [length,length]).
:- mode(app/3, [in,in,out]).
:- measure(app/3, [length,length,length]).

palindrome(L, P) :- nrev(L, R), app(L, R, P).

nrev([], []).
nrev([X|Xs], R) :- nrev(Xs, R1), app(R1, [X], R).

app([], L, L).
app([X|Xs], Ys, [X|Zs]) :- app(Xs, Ys, Zs).
)pl"},
      {"powset", R"pl(% All subsets of a list.
:- entry(powset/2).
:- mode(powset/2, [in,out]).
:- measure(powset/2, [length,length]).
:- mode(appendelem/4, [in,in,out,in]).
:- measure(appendelem/4, [length,void,length,length]).

powset([], [[]]).
powset([X|L], P) :- powset(L, P0), appendelem(P0, X, P, P0).

% appendelem(Ls, X, R, Tail): R is Tail prefixed with [X|L] for every L in Ls.
appendelem([], _, X, X).
appendelem([L|Ls], X, [[X|L]|Rs], Ys) :- appendelem(Ls, X, Rs, Ys).
)pl"},
      {"evpol", R"pl(% Polynomial evaluation by Horner's rule; coefficients lowest degree first.
:- entry(evpol/3).
:- mode(evpol/3, [in,in,out]).
:- measure(evpol/3, [length,void,void]).

evpol([], _, 0).
evpol([C|Cs], X, V) :- evpol(Cs, X, V1), V is C + X * V1.
)pl"},
  };
  return s;
}

}  // namespace costcal::predict
