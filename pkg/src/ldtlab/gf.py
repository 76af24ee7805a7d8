"""Prime-field arithmetic and seeded, counter-based randomness.

Scalar code uses :class:`FieldElement`; the vectorized paths elsewhere in the
package work on ``int64`` numpy arrays holding residues in ``[0, q)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import UsageError

# Products of two residues must fit in int64.
MAX_MODULUS = 2**31 - 1


def is_prime(q: int) -> bool:
    """Deterministic primality check (trial division, fine for q < 2**31)."""
    if q < 2:
        return False
    if q < 4:
        return True
    if q % 2 == 0 or q % 3 == 0:
        return False
    i = 5
    while i * i <= q:
        if q % i == 0 or q % (i + 2) == 0:
            return False
        i += 6
    return True


@dataclass(frozen=True)
class FieldParams:
    q: int

    def __post_init__(self):
        if not isinstance(self.q, (int, np.integer)) or isinstance(self.q, bool):
            raise UsageError(f"field size must be an integer, got {self.q!r}")
        object.__setattr__(self, "q", int(self.q))
        if self.q > MAX_MODULUS:
            raise UsageError(f"q={self.q} exceeds the supported bound {MAX_MODULUS}")
        if not is_prime(self.q):
            raise UsageError(f"q={self.q} is not prime")

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(int(value) % self.q, self)

    @property
    def zero(self) -> "FieldElement":
        return FieldElement(0, self)

    @property
    def one(self) -> "FieldElement":
        return FieldElement(1 % self.q, self)

    def elements(self):
        return [FieldElement(v, self) for v in range(self.q)]

    def random_element(self, rng: np.random.Generator) -> "FieldElement":
        return FieldElement(int(rng.integers(self.q)), self)


@dataclass(frozen=True)
class FieldElement:
    value: int
    params: FieldParams

    def __post_init__(self):
        if not 0 <= self.value < self.params.q:
            raise UsageError(f"{self.value} is not a residue mod {self.params.q}")

    @property
    def q(self) -> int:
        return self.params.q

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.params.q != self.params.q:
                raise UsageError(
                    f"mixed moduli: GF({self.params.q}) and GF({other.params.q})")
            return other.value
        if isinstance(other, (int, np.integer)) and not isinstance(other, bool):
            return int(other) % self.params.q
        return NotImplemented

    def _make(self, v: int) -> "FieldElement":
        return FieldElement(v % self.params.q, self.params)

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._make(self.value + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._make(self.value - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._make(o - self.value)

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._make(self.value * o)

    __rmul__ = __mul__

    def __neg__(self):
        return self._make(-self.value)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError(f"0 has no inverse in GF({self.params.q})")
        return self._make(pow(self.value, -1, self.params.q))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * self._make(o).inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return self._make(pow(self.value, e, self.params.q))

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.value == other.value and self.params.q == other.params.q
        if isinstance(other, (int, np.integer)) and not isinstance(other, bool):
            return self.value == int(other) % self.params.q
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.params.q))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.params.q})"


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def random_element(params: FieldParams, rng: np.random.Generator) -> FieldElement:
    return params.random_element(rng)


# ---------------------------------------------------------------------------
# vectorized helpers

@lru_cache(maxsize=32)
def inverse_table(q: int) -> np.ndarray:
    """``table[a]`` is the inverse of ``a`` mod q (``table[0] = 0``)."""
    if q > 1 << 22:
        raise UsageError("inverse table only cached for q <= 2**22")
    a = np.arange(q, dtype=np.int64)
    return powmod(a, q - 2, q)


def powmod(a: np.ndarray, e: int, q: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64) % q
    out = np.ones_like(a)
    while e:
        if e & 1:
            out = out * a % q
        a = a * a % q
        e >>= 1
    return out


def inv_array(a: np.ndarray, q: int) -> np.ndarray:
    if q <= 1 << 22:
        return inverse_table(q)[np.asarray(a, dtype=np.int64) % q]
    return powmod(a, q - 2, q)


# ---------------------------------------------------------------------------
# randomness

def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for substream ``stream`` of ``seed``.

    Philox is keyed by (seed, stream), so workers can derive independent
    substreams without coordination.
    """
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream) & 0xFFFFFFFFFFFFFFFF],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def random_vectors(rng: np.random.Generator, q: int, shape) -> np.ndarray:
    return rng.integers(0, q, size=shape, dtype=np.int64)
