"""Max-plus (tropical) semiring: scalars, matrices, and polynomial matrices.

The semiring is (R ∪ {-inf}, max, +).  The zero element ``EPS = -inf`` is
absorbing for ``otimes`` and neutral for ``oplus``; the unit element is 0.
IEEE -inf gives these identities exactly (max(-inf, a) = a and
-inf + a = -inf for every finite a), so no special-casing is needed and no
overflow artifacts can appear in cycle means.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

EPS = float("-inf")
UNIT = 0.0

__all__ = [
    "EPS",
    "UNIT",
    "oplus",
    "otimes",
    "MaxPlusMatrix",
    "MaxPlusPolyMatrix",
]


def oplus(a: float, b: float) -> float:
    """Semiring addition: max."""
    return a if a >= b else b


def otimes(a: float, b: float) -> float:
    """Semiring multiplication: ordinary addition, with -inf absorbing."""
    return a + b


@dataclass(frozen=True)
class MaxPlusMatrix:
    """Square matrix over the max-plus semiring, backed by a numpy array."""

    a: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.a, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("max-plus matrix must be square")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "a", arr)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "MaxPlusMatrix":
        return cls(np.full((n, n), EPS))

    @classmethod
    def identity(cls, n: int) -> "MaxPlusMatrix":
        m = np.full((n, n), EPS)
        np.fill_diagonal(m, UNIT)
        return cls(m)

    def __getitem__(self, ij):
        return float(self.a[ij])

    def oplus(self, other: "MaxPlusMatrix") -> "MaxPlusMatrix":
        self._check_dim(other)
        return MaxPlusMatrix(np.maximum(self.a, other.a))

    def otimes(self, other: "MaxPlusMatrix") -> "MaxPlusMatrix":
        """Max-plus product: (A ⊗ B)_ij = max_k (A_ik + B_kj)."""
        self._check_dim(other)
        # broadcast to (i, k, j); -inf + -inf = -inf, no nan possible
        return MaxPlusMatrix(np.max(self.a[:, :, None] + other.a[None, :, :], axis=1))

    def vec(self, x: np.ndarray) -> np.ndarray:
        """Max-plus matrix-vector product."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError("dimension mismatch")
        return np.max(self.a + x[None, :], axis=1)

    def power(self, k: int) -> "MaxPlusMatrix":
        if k < 0:
            raise ValueError("negative power")
        out = MaxPlusMatrix.identity(self.n)
        base = self
        while k:
            if k & 1:
                out = out.otimes(base)
            base = base.otimes(base)
            k >>= 1
        return out

    def closure(self) -> "MaxPlusMatrix":
        """Kleene star I ⊕ A ⊕ A² ⊕ ... ⊕ A^(n-1), by repeated squaring.

        Finite only when the graph of A has no positive-weight cycle.
        """
        c = self.oplus(MaxPlusMatrix.identity(self.n))
        steps = max(1, int(np.ceil(np.log2(max(self.n, 2)))))
        for _ in range(steps):
            c = c.otimes(c)
        return c

    def _check_dim(self, other: "MaxPlusMatrix"):
        if self.n != other.n:
            raise ValueError("dimension mismatch: %d vs %d" % (self.n, other.n))

    def __eq__(self, other):
        return isinstance(other, MaxPlusMatrix) and np.array_equal(self.a, other.a)


@dataclass
class MaxPlusPolyMatrix:
    """Square matrix of max-plus polynomials in the back-shift operator.

    Entry (i, j) is a sparse polynomial sum_l a_ij^(l) γ^l stored as
    ``monomials[i, j] = {l: coefficient}``; absent exponents are EPS.
    Exponents count event lags (γ x^k = x^(k-1)).
    """

    n: int
    monomials: dict = field(default_factory=dict)  # (i, j) -> {l: w}

    def add_monomial(self, i: int, j: int, l: int, w: float) -> None:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError("entry (%d, %d) out of range" % (i, j))
        if l < 0 or int(l) != l:
            raise ValueError("exponent must be a nonnegative integer")
        if w == EPS:
            return
        entry = self.monomials.setdefault((i, j), {})
        l = int(l)
        entry[l] = max(entry.get(l, EPS), float(w))

    @property
    def degree(self) -> int:
        return max((l for e in self.monomials.values() for l in e), default=0)

    def entry(self, i: int, j: int) -> dict:
        return dict(self.monomials.get((i, j), {}))

    def oplus(self, other: "MaxPlusPolyMatrix") -> "MaxPlusPolyMatrix":
        self._check_dim(other)
        out = MaxPlusPolyMatrix(self.n)
        for src in (self, other):
            for (i, j), entry in src.monomials.items():
                for l, w in entry.items():
                    out.add_monomial(i, j, l, w)
        return out

    def otimes(self, other: "MaxPlusPolyMatrix") -> "MaxPlusPolyMatrix":
        self._check_dim(other)
        out = MaxPlusPolyMatrix(self.n)
        for (i, k), ea in self.monomials.items():
            for j in range(self.n):
                eb = other.monomials.get((k, j))
                if not eb:
                    continue
                for la, wa in ea.items():
                    for lb, wb in eb.items():
                        out.add_monomial(i, j, la + lb, wa + wb)
        return out

    def eval(self, x: float) -> MaxPlusMatrix:
        """Evaluate entrywise at finite x: max_l (a^(l) + l·x).

        The valuation is a semiring homomorphism, so support (and hence
        irreducibility) is preserved.
        """
        if x == EPS or not np.isfinite(x):
            raise ValueError("evaluation point must be finite")
        m = np.full((self.n, self.n), EPS)
        for (i, j), entry in self.monomials.items():
            m[i, j] = max(w + l * x for l, w in entry.items())
        return MaxPlusMatrix(m)

    def coefficient_matrix(self, l: int) -> MaxPlusMatrix:
        """The matrix of γ^l coefficients."""
        m = np.full((self.n, self.n), EPS)
        for (i, j), entry in self.monomials.items():
            if l in entry:
                m[i, j] = entry[l]
        return MaxPlusMatrix(m)

    def to_json(self) -> str:
        entries = [
            {"i": i, "j": j, "l": l, "w": w}
            for (i, j), entry in sorted(self.monomials.items())
            for l, w in sorted(entry.items())
        ]
        return json.dumps({"n": self.n, "entries": entries})

    @classmethod
    def from_json(cls, text: str) -> "MaxPlusPolyMatrix":
        doc = json.loads(text)
        out = cls(int(doc["n"]))
        for e in doc["entries"]:
            out.add_monomial(int(e["i"]), int(e["j"]), int(e["l"]), float(e["w"]))
        return out

    def _check_dim(self, other: "MaxPlusPolyMatrix"):
        if self.n != other.n:
            raise ValueError("dimension mismatch: %d vs %d" % (self.n, other.n))
