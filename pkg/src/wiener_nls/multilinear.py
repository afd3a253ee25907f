"""Ternary trees, tree operators and the multilinear corrections ``z_k``."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .grid import Field, GridMismatchError, SpaceTimeField, cubic, physical, spectral
from .propagator import check_sign, duhamel, free_evolution, phase

#: default cap on the expansion order
MAX_ORDER = 7


# -- trees -----------------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    @property
    def size(self) -> int:
        return 1

    def to_bracket(self) -> str:
        return "."

    def __str__(self) -> str:
        return "."


@dataclass(frozen=True)
class Node:
    left: "Tree"
    middle: "Tree"
    right: "Tree"

    @property
    def children(self) -> tuple:
        return (self.left, self.middle, self.right)

    @property
    def size(self) -> int:
        return self.left.size + self.middle.size + self.right.size

    def to_bracket(self) -> str:
        return "[" + ",".join(c.to_bracket() for c in self.children) + "]"

    def __str__(self) -> str:
        return self.to_bracket()


Tree = Leaf | Node
LEAF = Leaf()


def parse_tree(text: str) -> Tree:
    """Inverse of ``to_bracket``: ``"."`` or ``"[a,b,c]"``."""
    text = text.replace(" ", "")

    def parse(i: int):
        if text[i] == ".":
            return LEAF, i + 1
        if text[i] != "[":
            raise ValueError(f"unexpected {text[i]!r} at {i}")
        kids = []
        i += 1
        for j in range(3):
            kid, i = parse(i)
            kids.append(kid)
            want = "," if j < 2 else "]"
            if i >= len(text) or text[i] != want:
                raise ValueError(f"expected {want!r} at {i}")
            i += 1
        return Node(*kids), i

    tree, end = parse(0)
    if end != len(text):
        raise ValueError("trailing characters after tree")
    return tree


def odd_triples(n: int, cap: int | None = None):
    """Ordered triples of positive odd integers summing to ``n``."""
    top = n if cap is None else cap
    for a in range(1, top + 1, 2):
        for b in range(1, top + 1, 2):
            c = n - a - b
            if c >= 1 and c % 2 == 1 and c <= top:
                yield a, b, c


@lru_cache(maxsize=None)
def _trees(n: int) -> tuple:
    if n < 1 or n % 2 == 0:
        return ()
    if n == 1:
        return (LEAF,)
    out = []
    for a, b, c in odd_triples(n):
        for t1 in _trees(a):
            for t2 in _trees(b):
                for t3 in _trees(c):
                    out.append(Node(t1, t2, t3))
    return tuple(out)


def enumerate_trees(n: int) -> list[Tree]:
    """All ternary trees with ``n`` leaves; empty for even ``n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return list(_trees(n))


# -- operators -------------------------------------------------------------------


def _product(a: SpaceTimeField, b: SpaceTimeField, c: SpaceTimeField) -> SpaceTimeField:
    return SpaceTimeField(a.grid, cubic(a.values, b.values, c.values, a.grid), a.times)


def tree_operator(tau: Tree, inputs, sign: int = 1, times=None, _memo=None) -> SpaceTimeField:
    """``R_tau[inputs]``: free evolution at leaves, ``duhamel(0, a conj(b) c)`` at nodes."""
    inputs = list(inputs)
    if len(inputs) != tau.size:
        raise ValueError(f"tree of size {tau.size} got {len(inputs)} inputs")
    sign = check_sign(sign)
    grids = {f.grid for f in inputs}
    if len(grids) != 1:
        raise GridMismatchError("tree inputs live on different grids")
    memo = {} if _memo is None else _memo
    key = (tau, tuple(id(f) for f in inputs))
    if key in memo:
        return memo[key]
    if isinstance(tau, Leaf):
        out = free_evolution(inputs[0], times)
    else:
        parts, i = [], 0
        for child in tau.children:
            parts.append(tree_operator(child, inputs[i : i + child.size], sign, times, memo))
            i += child.size
        out = duhamel(None, _product(*parts), sign)
    memo[key] = out
    return out


def tree_sum(f: Field, k: int, sign: int = 1, times=None) -> SpaceTimeField:
    """``sum_{|tau| = k} R_tau[f, ..., f]``."""
    memo: dict = {}
    trees = enumerate_trees(k)
    g = f.grid
    times = g.times if times is None else times
    acc = SpaceTimeField.zeros(g, times)
    for tau in trees:
        acc = acc + tree_operator(tau, [f] * k, sign, times, memo)
    return acc


# -- multilinear data ------------------------------------------------------------------


@dataclass
class MultilinearData:
    """``z_1 .. z_M`` on a shared time lattice; ``z[k-1]`` holds ``z_k``."""

    f: Field
    sign: int
    z: list = field(default_factory=list)

    @property
    def M(self) -> int:
        return len(self.z)

    @property
    def grid(self):
        return self.f.grid

    @property
    def times(self):
        return self.z[0].times

    def zk(self, k: int) -> SpaceTimeField:
        return self.z[k - 1]

    def partial_sum(self, M: int | None = None) -> SpaceTimeField:
        M = self.M if M is None else M
        acc = self.z[0]
        for k in range(3, M + 1, 2):
            acc = acc + self.z[k - 1]
        return acc


def compute_z(f: Field, M: int, sign: int = 1, times=None, max_order: int = MAX_ORDER) -> MultilinearData:
    """Recursive corrections: ``z_1 = e^{it Delta} f`` and, for odd ``k``,
    ``z_k = duhamel(0, sum_{k1+k2+k3=k} z_k1 conj(z_k2) z_k3)``."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if M > max_order:
        raise ValueError(f"M={M} exceeds the configured cap {max_order}")
    sign = check_sign(sign)
    g = f.grid
    z = [free_evolution(f, times)]
    zero = SpaceTimeField.zeros(g, z[0].times)
    for k in range(2, M + 1):
        if k % 2 == 0:
            z.append(zero)
            continue
        h = np.zeros_like(z[0].values)
        for a, b, c in odd_triples(k):
            h += cubic(z[a - 1].values, z[b - 1].values, z[c - 1].values, g)
        z.append(duhamel(None, SpaceTimeField(g, h, z[0].times), sign))
    return MultilinearData(f=f, sign=sign, z=z)


def tail_triples(M: int) -> list[tuple[int, int, int]]:
    """Odd ``(k1, k2, k3)`` with each ``kj <= M`` and ``k1 + k2 + k3 > M``."""
    odd = range(1, M + 1, 2)
    return [t for t in product(odd, repeat=3) if sum(t) > M]


def z_tail(data: MultilinearData) -> SpaceTimeField:
    """``[z, z, z]_{>M}``: products whose total order exceeds ``M``."""
    g = data.grid
    h = np.zeros_like(data.z[0].values)
    for a, b, c in tail_triples(data.M):
        h += cubic(data.zk(a).values, data.zk(b).values, data.zk(c).values, g)
    return SpaceTimeField(g, h, data.times)


# -- regularity ladder -----------------------------------------------------------------


def mu(k: int, S: float) -> float:
    """``min(k S, 2 S + 1/2, S + 1)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not S > 0:
        raise ValueError("S must be > 0")
    return min(k * S, 2 * S + 0.5, S + 1.0)


def s_min(d: int) -> float:
    """Regularity threshold of the randomized theory in dimension ``d >= 3``."""
    if d < 3:
        raise ValueError("d must be >= 3")
    if d == 3:
        return 0.0
    if d == 4:
        return 0.25
    return (d - 4) / 2


@dataclass
class InductiveReport:
    checked: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"checked": self.checked, "violations": self.violations, "ok": self.ok}


def mu_inductive_check(k_max: int, S_grid, tol: float = 1e-12) -> InductiveReport:
    """Check ``mu(k1+k2+k3) <= mu(k1) + min(mu(k2), 1/2) + min(mu(k3), 1/2)``
    for ``k1 <= k2 <= k3 <= k_max`` and every ``S`` in ``S_grid``."""
    checked = 0
    bad = []
    for S in S_grid:
        for k1 in range(1, k_max + 1):
            for k2 in range(k1, k_max + 1):
                for k3 in range(k2, k_max + 1):
                    lhs = mu(k1 + k2 + k3, S)
                    rhs = mu(k1, S) + min(mu(k2, S), 0.5) + min(mu(k3, S), 0.5)
                    checked += 1
                    if lhs > rhs + tol:
                        bad.append({"k": [k1, k2, k3], "S": float(S), "lhs": lhs, "rhs": rhs})
    return InductiveReport(checked=checked, violations=bad)


# -- Fourier support ---------------------------------------------------------------------


def fourier_support_width(values: np.ndarray, grid, rtol: float = 1e-12) -> np.ndarray:
    """Per-axis extent ``max xi_j - min xi_j`` of the Fourier support.

    Accepts one slice or a stack; a stack is reduced to the union of its
    slices' supports.  Assumes the support does not wrap around the grid.
    """
    hat = np.abs(spectral(np.asarray(values), grid))
    if hat.ndim > grid.d:
        hat = hat.reshape((-1,) + grid.shape).max(axis=0)
    top = hat.max()
    if top == 0:
        return np.zeros(grid.d)
    live = hat > rtol * top
    out = []
    for j, c in enumerate(grid.xi_mesh):
        sel = c[live]
        out.append(sel.max() - sel.min())
    return np.asarray(out)


def z3_final(f: Field, sign: int = 1, times=None) -> Field:
    """``z_3`` at the last lattice time without storing the time history.

    Same trapezoid rule as :func:`compute_z`, evaluated slice by slice.
    """
    sign = check_sign(sign)
    g = f.grid
    times = g.times if times is None else np.asarray(times, dtype=float)
    f_hat = spectral(f.physical_values(), g)
    tau = times - times[0]
    acc = np.zeros(g.shape, dtype=np.complex128)
    prev = None
    for j, t in enumerate(times):
        z1 = physical(f_hat * phase(g, t), g)
        cur = spectral(cubic(z1, z1, z1, g), g) * phase(g, -tau[j])
        if prev is not None:
            acc += (0.5 * (-1j * sign) * (tau[j] - tau[j - 1])) * (prev + cur)
        prev = cur
    return Field(g, physical(acc * phase(g, tau[-1]), g))
