"""Exact linear feasibility over nonnegative rational variables.

Phase one of the simplex method on a dense ``Fraction`` tableau with one
artificial variable per row. Bland's rule picks entering and leaving
columns, so pivoting never cycles and the returned basic solution is the
same on every run.
"""

import logging
from fractions import Fraction
from typing import Dict, Hashable, List, Mapping, Optional, Tuple, Union

from .error_handling import LimitExceededError

logger = logging.getLogger("probmu.feasibility")

Number = Union[int, Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)


class LinearSystem:
    """A system ``A x = b, x >= 0`` built row by row with hashable variable keys."""

    def __init__(self, name: str = "lp", max_pivots: int = 100000):
        self.name = name
        self.max_pivots = max_pivots
        self._index: Dict[Hashable, int] = {}
        self._keys: List[Hashable] = []
        self._rows: List[Tuple[Dict[int, Fraction], Fraction]] = []
        self._infeasible = False

    @property
    def variable_count(self) -> int:
        return len(self._keys)

    @property
    def row_count(self) -> int:
        return len(self._rows)

    def variable(self, key: Hashable) -> Hashable:
        """Register a nonnegative variable (idempotent) and return its key."""
        if key not in self._index:
            self._index[key] = len(self._keys)
            self._keys.append(key)
        return key

    def add_equality(self, terms: Mapping[Hashable, Number], rhs: Number = 0) -> None:
        """Add ``sum(coef * var) == rhs``; unknown keys become new variables."""
        row: Dict[int, Fraction] = {}
        for key, coefficient in terms.items():
            if coefficient == 0:
                continue
            column = self._index[self.variable(key)]
            row[column] = row.get(column, ZERO) + Fraction(coefficient)
        row = {column: value for column, value in row.items() if value != 0}
        rhs = Fraction(rhs)
        if not row:
            if rhs != 0:
                self._infeasible = True
            return
        self._rows.append((row, rhs))

    def fix(self, key: Hashable, value: Number) -> None:
        """Pin a variable to a constant."""
        self.add_equality({key: 1}, value)

    def forbid(self) -> None:
        """Mark the system infeasible (an empty constraint ``0 == 1``)."""
        self._infeasible = True

    def solve(self) -> Optional[Dict[Hashable, Fraction]]:
        """Return a feasible assignment, or None when the system has none."""
        if self._infeasible:
            return None
        if not self._rows:
            return {key: ZERO for key in self._keys}

        n = len(self._keys)
        m = len(self._rows)
        width = n + m

        tableau: List[List[Fraction]] = []
        rhs: List[Fraction] = []
        for i, (row, value) in enumerate(self._rows):
            sign = -1 if value < 0 else 1
            dense = [ZERO] * width
            for column, coefficient in row.items():
                dense[column] = coefficient * sign
            dense[n + i] = ONE
            tableau.append(dense)
            rhs.append(value * sign)

        basis = [n + i for i in range(m)]

        # Reduced costs of the phase-one objective (sum of artificials).
        cost = [ZERO] * width
        for j in range(n):
            total = ZERO
            for i in range(m):
                total += tableau[i][j]
            cost[j] = -total

        pivots = 0
        while True:
            entering = next((j for j in range(width) if cost[j] < 0), None)
            if entering is None:
                break

            leaving = None
            best: Optional[Fraction] = None
            for i in range(m):
                coefficient = tableau[i][entering]
                if coefficient > 0:
                    ratio = rhs[i] / coefficient
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leaving]):
                        best = ratio
                        leaving = i
            if leaving is None:
                # Phase one is bounded below by zero; an unbounded ray cannot lower it.
                break

            self._pivot(tableau, rhs, cost, leaving, entering)
            basis[leaving] = entering
            pivots += 1
            if pivots > self.max_pivots:
                raise LimitExceededError(
                    f"{self.name}: pivot limit exceeded", limit="max_pivots", value=self.max_pivots
                )

        residual = sum((rhs[i] for i in range(m) if basis[i] >= n), ZERO)
        logger.debug("%s: %d vars, %d rows, %d pivots, residual %s", self.name, n, m, pivots, residual)
        if residual != 0:
            return None

        solution = {key: ZERO for key in self._keys}
        for i, column in enumerate(basis):
            if column < n:
                solution[self._keys[column]] = rhs[i]
        return solution

    def feasible(self) -> bool:
        return self.solve() is not None

    @staticmethod
    def _pivot(tableau: List[List[Fraction]], rhs: List[Fraction], cost: List[Fraction],
               row: int, column: int) -> None:
        pivot_row = tableau[row]
        factor = pivot_row[column]
        if factor != 1:
            for j, value in enumerate(pivot_row):
                if value:
                    pivot_row[j] = value / factor
            rhs[row] = rhs[row] / factor

        nonzero = [j for j, value in enumerate(pivot_row) if value]
        for i, other in enumerate(tableau):
            if i == row:
                continue
            multiplier = other[column]
            if multiplier:
                for j in nonzero:
                    other[j] -= multiplier * pivot_row[j]
                rhs[i] -= multiplier * rhs[row]

        multiplier = cost[column]
        if multiplier:
            for j in nonzero:
                cost[j] -= multiplier * pivot_row[j]
