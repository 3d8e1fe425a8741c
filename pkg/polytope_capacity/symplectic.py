"""Standard symplectic structure of R^{2n}.

Block coordinates are (q_1..q_n, p_1..p_n); J(q, p) = (-p, q) and
ω₀(u, v) = ⟨u, Jv⟩ under the default sign convention.
"""

from __future__ import annotations

import enum
import json
import logging
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import voluptuous as vol

from .config import DEFAULT_CONFIG, SolverConfig
from .exceptions import (
    Infeasible,
    InvalidDimensionError,
    InvalidFrameError,
    NotSymplecticError,
    ValidationError,
)

_LOGGER = logging.getLogger(__name__)

PSI_SCHEMA = vol.Schema(
    {
        vol.Required("dim"): vol.All(int, vol.Range(min=2)),
        vol.Required("rows"): [[vol.Coerce(float)]],
    }
)


def _half_dim(dim: int) -> int:
    if dim <= 0 or dim % 2:
        raise InvalidDimensionError(f"ambient dimension must be even, got {dim}")
    return dim // 2


def standard_j(dim: int) -> np.ndarray:
    """The matrix J = [[0, -I], [I, 0]] of size dim×dim."""
    n = _half_dim(dim)
    j = np.zeros((dim, dim))
    j[:n, n:] = -np.eye(n)
    j[n:, :n] = np.eye(n)
    return j


def apply_j(u: np.ndarray) -> np.ndarray:
    """Apply J along the last axis; works on single vectors and stacks."""
    u = np.asarray(u, dtype=float)
    n = _half_dim(u.shape[-1])
    return np.concatenate((-u[..., n:], u[..., :n]), axis=-1)


def omega0(u: np.ndarray, v: np.ndarray, *, sign: int = 1) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise InvalidDimensionError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(sign * (u @ apply_j(v)))


def omega_matrix(vectors: np.ndarray, *, sign: int = 1) -> np.ndarray:
    """Gram matrix W[a, b] = ω₀(x_a, x_b) for the rows of ``vectors``."""
    vectors = np.asarray(vectors, dtype=float)
    return sign * (vectors @ apply_j(vectors).T)


# ───────────────────────────── Ψ matrices ──────────────────────────────


@dataclass(frozen=True, eq=False)
class SymplecticMatrix:
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])


def validate_symplectic(
    m: Any, *, config: SolverConfig = DEFAULT_CONFIG
) -> SymplecticMatrix:
    """Accept ``m`` iff ΨᵀJΨ = J entrywise within ``config.sym_tol``."""
    psi = np.array(m, dtype=float)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise InvalidDimensionError(f"Ψ must be square, got shape {psi.shape}")
    j = standard_j(psi.shape[0])
    err = float(np.max(np.abs(psi.T @ j @ psi - j)))
    if err > config.sym_tol:
        raise NotSymplecticError(f"ΨᵀJΨ deviates from J by {err:.3e}")
    psi.setflags(write=False)
    return SymplecticMatrix(psi)


def load_psi(source: str | Path | Mapping[str, Any], *, config: SolverConfig = DEFAULT_CONFIG) -> SymplecticMatrix:
    """Read Ψ from a JSON file path or an already parsed mapping."""
    if isinstance(source, Mapping):
        data = source
    else:
        data = json.loads(Path(source).read_text(encoding="utf-8"))
    try:
        data = PSI_SCHEMA(data)
    except vol.Invalid as err:
        raise ValidationError(f"malformed Ψ file: {err}") from err
    rows = data["rows"]
    if len(rows) != data["dim"] or any(len(r) != data["dim"] for r in rows):
        raise InvalidDimensionError("Ψ rows do not match declared dim")
    return validate_symplectic(rows, config=config)


@dataclass(frozen=True, eq=False)
class FixedDecomposition:
    """Orthonormal bases (as columns) of Ker(Ψ−I), E_Ψ and Im(Ψ−I).

    ``singular_values`` are those of Ψ−I restricted to E_Ψ, in the order of
    ``e_psi_basis`` / ``image_basis``.
    """

    kernel_basis: np.ndarray
    e_psi_basis: np.ndarray
    image_basis: np.ndarray
    cokernel_basis: np.ndarray
    singular_values: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.singular_values.size)

    def pseudo_inverse(self) -> np.ndarray:
        """G with G·w ∈ E_Ψ and (Ψ−I)G·w = w for every w ∈ Im(Ψ−I)."""
        return (self.e_psi_basis / self.singular_values) @ self.image_basis.T


def fixed_decomposition(
    psi: SymplecticMatrix, *, config: SolverConfig = DEFAULT_CONFIG
) -> FixedDecomposition:
    a = psi.matrix - np.eye(psi.dim)
    u, s, vt = np.linalg.svd(a)
    smax = float(s[0]) if s.size else 0.0
    rank = int(np.sum(s > config.rank_tol * max(smax, 1.0)))
    _LOGGER.debug("Ψ−I has rank %d (σ_max=%.3e)", rank, smax)
    return FixedDecomposition(
        kernel_basis=vt[rank:].T,
        e_psi_basis=vt[:rank].T,
        image_basis=u[:, :rank],
        cokernel_basis=u[:, rank:],
        singular_values=s[:rank],
    )


def solve_fixed_shift(
    psi: SymplecticMatrix,
    w: np.ndarray,
    *,
    decomposition: FixedDecomposition | None = None,
    config: SolverConfig = DEFAULT_CONFIG,
) -> np.ndarray | Infeasible:
    """Unique v ∈ E_Ψ with (Ψ−I)v = w, or Infeasible when w ∉ Im(Ψ−I)."""
    w = np.asarray(w, dtype=float)
    if w.shape != (psi.dim,):
        raise InvalidDimensionError(f"expected vector of size {psi.dim}")
    dec = decomposition or fixed_decomposition(psi, config=config)
    coeffs = dec.image_basis.T @ w
    residual = float(np.linalg.norm(w - dec.image_basis @ coeffs))
    if residual > config.feas_tol * (1.0 + float(np.linalg.norm(w))):
        return Infeasible(f"w is not in Im(Ψ−I) (residual {residual:.3e})")
    return dec.e_psi_basis @ (coeffs / dec.singular_values)


# ───────────────────────── coisotropic frames ──────────────────────────


class Subspace(enum.Enum):
    R = "R"  # R^{n,k}
    V0 = "V0"  # V_0^{n,k}


@dataclass(frozen=True)
class CoisotropicFrame:
    n: int
    k: int

    def __post_init__(self) -> None:
        if self.n < 1 or not 0 <= self.k < self.n:
            raise InvalidFrameError(f"need 0 <= k < n, got n={self.n}, k={self.k}")

    @property
    def dim(self) -> int:
        return 2 * self.n

    def indices(self, which: Subspace) -> np.ndarray:
        if which is Subspace.R:
            return np.r_[np.arange(self.n), self.n + np.arange(self.k)]
        return np.arange(self.k, self.n)

    def complement(self, which: Subspace) -> np.ndarray:
        return np.setdiff1d(np.arange(self.dim), self.indices(which))

    def basis(self, which: Subspace) -> np.ndarray:
        return np.eye(self.dim)[:, self.indices(which)]

    def selector(self, which: Subspace) -> np.ndarray:
        """Rows picking the coordinates that must vanish on ``which``."""
        return np.eye(self.dim)[self.complement(which)]


def coisotropic_membership(
    w: np.ndarray,
    frame: CoisotropicFrame,
    which: Subspace,
    *,
    config: SolverConfig = DEFAULT_CONFIG,
) -> bool:
    w = np.asarray(w, dtype=float)
    if w.shape != (frame.dim,):
        raise InvalidDimensionError(f"expected vector of size {frame.dim}")
    outside = w[frame.complement(which)]
    return bool(np.all(np.abs(outside) <= config.feas_tol))
