"""Solver configuration: defaults from const, overrides validated by voluptuous."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import asdict, dataclass, replace
from typing import Any

import voluptuous as vol

from .const import (
    CONF_CHUNK_CELLS,
    CONF_CHUNK_SIZE,
    CONF_DEDUP_TOL,
    CONF_EXACT_CAP,
    CONF_FACE_BUDGET,
    CONF_FEAS_TOL,
    CONF_MAX_DIM,
    CONF_MAX_FACETS,
    CONF_MODE,
    CONF_OMEGA_SIGN,
    CONF_PERM_BUDGET,
    CONF_POS_TOL,
    CONF_RANK_TOL,
    CONF_RECONSTRUCT_TOL,
    CONF_SEED,
    CONF_SYM_TOL,
    CONF_TRANSLATE,
    CONF_WORKERS,
    DEFAULT_CHUNK_CELLS,
    DEFAULT_CHUNK_SIZE,
    DEFAULT_DEDUP_TOL,
    DEFAULT_EXACT_CAP,
    DEFAULT_FACE_BUDGET,
    DEFAULT_FEAS_TOL,
    DEFAULT_MAX_DIM,
    DEFAULT_MAX_FACETS,
    DEFAULT_MODE,
    DEFAULT_OMEGA_SIGN,
    DEFAULT_PERM_BUDGET,
    DEFAULT_POS_TOL,
    DEFAULT_RANK_TOL,
    DEFAULT_RECONSTRUCT_TOL,
    DEFAULT_SEED,
    DEFAULT_SYM_TOL,
    DEFAULT_TRANSLATE,
    DEFAULT_WORKERS,
    MODES,
    TRANSLATE_AUTO,
    TRANSLATE_NONE,
)
from .exceptions import ValidationError

_TOL = vol.All(vol.Coerce(float), vol.Range(min=0.0, min_included=False))
_POSINT = vol.All(vol.Coerce(int), vol.Range(min=1))

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_SYM_TOL): _TOL,
        vol.Optional(CONF_RANK_TOL): _TOL,
        vol.Optional(CONF_FEAS_TOL): _TOL,
        vol.Optional(CONF_POS_TOL): _TOL,
        vol.Optional(CONF_DEDUP_TOL): _TOL,
        vol.Optional(CONF_RECONSTRUCT_TOL): _TOL,
        vol.Optional(CONF_MAX_FACETS): _POSINT,
        vol.Optional(CONF_MAX_DIM): vol.All(vol.Coerce(int), vol.Range(min=2)),
        vol.Optional(CONF_EXACT_CAP): _POSINT,
        vol.Optional(CONF_FACE_BUDGET): _POSINT,
        vol.Optional(CONF_MODE): vol.In(MODES),
        vol.Optional(CONF_PERM_BUDGET): _POSINT,
        vol.Optional(CONF_SEED): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Optional(CONF_WORKERS): _POSINT,
        vol.Optional(CONF_TRANSLATE): vol.In((TRANSLATE_AUTO, TRANSLATE_NONE)),
        vol.Optional(CONF_OMEGA_SIGN): vol.All(vol.Coerce(int), vol.In((1, -1))),
        vol.Optional(CONF_CHUNK_SIZE): _POSINT,
        vol.Optional(CONF_CHUNK_CELLS): _POSINT,
    }
)


@dataclass(frozen=True)
class SolverConfig:
    sym_tol: float = DEFAULT_SYM_TOL
    rank_tol: float = DEFAULT_RANK_TOL
    feas_tol: float = DEFAULT_FEAS_TOL
    pos_tol: float = DEFAULT_POS_TOL
    dedup_tol: float = DEFAULT_DEDUP_TOL
    reconstruct_tol: float = DEFAULT_RECONSTRUCT_TOL
    max_facets: int = DEFAULT_MAX_FACETS
    max_dim: int = DEFAULT_MAX_DIM
    exact_cap: int = DEFAULT_EXACT_CAP
    face_budget: int = DEFAULT_FACE_BUDGET
    mode: str = DEFAULT_MODE
    perm_budget: int = DEFAULT_PERM_BUDGET
    seed: int = DEFAULT_SEED
    workers: int = DEFAULT_WORKERS
    translate: str = DEFAULT_TRANSLATE
    omega_sign: int = DEFAULT_OMEGA_SIGN
    chunk_size: int = DEFAULT_CHUNK_SIZE
    chunk_cells: int = DEFAULT_CHUNK_CELLS

    @classmethod
    def from_options(cls, options: Mapping[str, Any] | None = None) -> SolverConfig:
        """Build a config from a mapping of option overrides.

        Keys not known to the schema are rejected; ``None`` values are ignored.
        """
        raw = {k: v for k, v in (options or {}).items() if v is not None}
        try:
            clean = CONFIG_SCHEMA(raw)
        except vol.Invalid as err:
            raise ValidationError(f"invalid option: {err}") from err
        return cls(**clean)

    def with_options(self, **overrides: Any) -> SolverConfig:
        merged = {**asdict(self), **{k: v for k, v in overrides.items() if v is not None}}
        return SolverConfig.from_options(merged)

    def flipped(self) -> SolverConfig:
        """Same config under the opposite ω₀ sign convention."""
        return replace(self, omega_sign=-self.omega_sign)


DEFAULT_CONFIG = SolverConfig()
