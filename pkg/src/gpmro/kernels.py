"""Kernels on the joint decision/parameter space.

Base kernels (linear, squared exponential, Matern) read a declared coordinate
slice of the joint input; sums and products combine children evaluated on
their own slices.  Sums of two unit-bounded kernels are averaged so the
composite keeps k(z, z) <= 1, which the confidence-bound machinery relies on.
Linear kernels return the raw dot product; callers that need the unit bound
must scale their coordinates into the unit ball (the synthetic benchmarks do).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gamma as _gamma_fn, kv as _bessel_kv

from .domain import DomainError

# Added to Gram diagonals before any factorization.
JITTER = 1e-8


def _as_matrix(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[None, :]
    return Z


@dataclass(frozen=True)
class KernelSpec:
    """Base class; concrete kernels implement ``cross`` on coordinate blocks."""

    def eval(self, z, z2) -> float:
        z = np.asarray(z, dtype=float).ravel()
        z2 = np.asarray(z2, dtype=float).ravel()
        if z.shape != z2.shape:
            raise DomainError(f"kernel inputs differ in dimension: {z.shape} vs {z2.shape}")
        self._check_dim(z.size)
        return float(self.cross(z[None, :], z2[None, :])[0, 0])

    def cross(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diag(self, Z: np.ndarray) -> np.ndarray:
        """k(z, z) for each row of Z."""
        raise NotImplementedError

    def _check_dim(self, dim: int) -> None:
        stop = self._max_stop()
        if stop is not None and stop > dim:
            raise DomainError(f"kernel reads coordinates up to {stop}, input has dimension {dim}")

    def _max_stop(self) -> Optional[int]:
        raise NotImplementedError

    def _slice_of(self, Z: np.ndarray, input_slice) -> np.ndarray:
        if input_slice is None:
            return Z
        a, b = input_slice
        if b > Z.shape[1]:
            raise DomainError(f"slice ({a}, {b}) exceeds input dimension {Z.shape[1]}")
        return Z[:, a:b]

    def to_dict(self) -> dict:
        raise NotImplementedError


def _sqdist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # (a - b)^2 summed; evaluated pairwise so the result is exactly symmetric
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


@dataclass(frozen=True)
class Linear(KernelSpec):
    """k(u, v) = (u . v) / scale^2 on the selected coordinates.

    ``scale`` implements the unit-ball input normalization: set it to the
    largest input norm on the domain so that k(z, z) <= 1 holds there.
    """

    input_slice: Optional[tuple[int, int]] = None
    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0:
            raise DomainError("scale must be positive")

    def cross(self, A, B):
        A = self._slice_of(_as_matrix(A), self.input_slice)
        B = self._slice_of(_as_matrix(B), self.input_slice)
        return (A @ B.T) / (self.scale * self.scale)

    def diag(self, Z):
        Z = self._slice_of(_as_matrix(Z), self.input_slice)
        return np.einsum("ij,ij->i", Z, Z) / (self.scale * self.scale)

    def _max_stop(self):
        return None if self.input_slice is None else self.input_slice[1]

    def to_dict(self):
        return {
            "type": "linear",
            "scale": self.scale,
            "slice": list(self.input_slice) if self.input_slice else None,
        }


@dataclass(frozen=True)
class SquaredExponential(KernelSpec):
    """k(u, v) = exp(-||u - v||^2 / (2 l^2))."""

    lengthscale: float = 1.0
    input_slice: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.lengthscale <= 0:
            raise DomainError("lengthscale must be positive")

    def cross(self, A, B):
        A = self._slice_of(_as_matrix(A), self.input_slice)
        B = self._slice_of(_as_matrix(B), self.input_slice)
        return np.exp(-_sqdist(A, B) / (2.0 * self.lengthscale**2))

    def diag(self, Z):
        Z = _as_matrix(Z)
        return np.ones(Z.shape[0])

    def _max_stop(self):
        return None if self.input_slice is None else self.input_slice[1]

    def to_dict(self):
        return {
            "type": "se",
            "lengthscale": self.lengthscale,
            "slice": list(self.input_slice) if self.input_slice else None,
        }


@dataclass(frozen=True)
class Matern(KernelSpec):
    """Matern kernel with smoothness nu and lengthscale l.

    Half-integer nu in {1/2, 3/2, 5/2} uses the closed forms; other nu values
    go through the modified Bessel function of the second kind.
    """

    nu: float = 2.5
    lengthscale: float = 1.0
    input_slice: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.nu <= 0 or self.lengthscale <= 0:
            raise DomainError("nu and lengthscale must be positive")

    def _from_dist(self, r: np.ndarray) -> np.ndarray:
        s = np.sqrt(2.0 * self.nu) * r / self.lengthscale
        if self.nu == 0.5:
            return np.exp(-s)
        if self.nu == 1.5:
            return (1.0 + s) * np.exp(-s)
        if self.nu == 2.5:
            return (1.0 + s + s * s / 3.0) * np.exp(-s)
        out = np.ones_like(s)
        pos = s > 1e-12
        sp = s[pos]
        coef = 2.0 ** (1.0 - self.nu) / _gamma_fn(self.nu)
        out[pos] = coef * sp**self.nu * _bessel_kv(self.nu, sp)
        return out

    def cross(self, A, B):
        A = self._slice_of(_as_matrix(A), self.input_slice)
        B = self._slice_of(_as_matrix(B), self.input_slice)
        r = np.sqrt(np.maximum(_sqdist(A, B), 0.0))
        return self._from_dist(r)

    def diag(self, Z):
        Z = _as_matrix(Z)
        return np.ones(Z.shape[0])

    def _max_stop(self):
        return None if self.input_slice is None else self.input_slice[1]

    def to_dict(self):
        return {
            "type": "matern",
            "nu": self.nu,
            "lengthscale": self.lengthscale,
            "slice": list(self.input_slice) if self.input_slice else None,
        }


def _child_stop(child: KernelSpec) -> Optional[int]:
    return child._max_stop()


@dataclass(frozen=True)
class Sum(KernelSpec):
    """Average of two kernels; averaging keeps unit-bounded children unit-bounded."""

    left: KernelSpec
    right: KernelSpec

    def cross(self, A, B):
        return 0.5 * (self.left.cross(A, B) + self.right.cross(A, B))

    def diag(self, Z):
        return 0.5 * (self.left.diag(Z) + self.right.diag(Z))

    def _max_stop(self):
        stops = [s for s in (_child_stop(self.left), _child_stop(self.right)) if s is not None]
        return max(stops) if stops else None

    def to_dict(self):
        return {"type": "sum", "children": [self.left.to_dict(), self.right.to_dict()]}


@dataclass(frozen=True)
class Product(KernelSpec):
    left: KernelSpec
    right: KernelSpec

    def cross(self, A, B):
        return self.left.cross(A, B) * self.right.cross(A, B)

    def diag(self, Z):
        return self.left.diag(Z) * self.right.diag(Z)

    def _max_stop(self):
        stops = [s for s in (_child_stop(self.left), _child_stop(self.right)) if s is not None]
        return max(stops) if stops else None

    def to_dict(self):
        return {"type": "product", "children": [self.left.to_dict(), self.right.to_dict()]}


def gram(spec: KernelSpec, Z) -> np.ndarray:
    """Gram matrix over a point set; exactly symmetric by construction."""
    Z = _as_matrix(Z)
    spec._check_dim(Z.shape[1])
    G = spec.cross(Z, Z)
    upper = np.triu(G, 1)
    return upper + upper.T + np.diag(np.diag(G))


def from_dict(d: dict) -> KernelSpec:
    """Inverse of ``KernelSpec.to_dict``; raises DomainError on unknown types."""
    kind = d.get("type")
    sl = d.get("slice")
    sl = tuple(sl) if sl is not None else None
    if kind == "linear":
        return Linear(input_slice=sl, scale=float(d.get("scale", 1.0)))
    if kind == "se":
        return SquaredExponential(lengthscale=float(d.get("lengthscale", 1.0)), input_slice=sl)
    if kind == "matern":
        return Matern(
            nu=float(d.get("nu", 2.5)),
            lengthscale=float(d.get("lengthscale", 1.0)),
            input_slice=sl,
        )
    if kind in ("sum", "product"):
        children = d.get("children") or []
        if len(children) != 2:
            raise DomainError(f"{kind} kernel requires exactly two children")
        left, right = from_dict(children[0]), from_dict(children[1])
        return Sum(left, right) if kind == "sum" else Product(left, right)
    raise DomainError(f"unknown kernel type {kind!r}")
