"""Residual reports: named norms over unmasked grid points.

Every verification operation returns a ResidualReport carrying the max
norm and the grid-weighted L2 norm of one or more residual fields, plus
grid metadata and the masked-point count. Reports serialize to JSON as

    {name, grid: {nx, ny, hx, hy}, max_norm, l2_norm, masked_points,
     parts: [{name, max_norm, l2_norm}, ...], details: {...}}

where `parts` breaks a multi-equation residual into its components and
`details` carries operation-specific scalars (variances, flags).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import GridSpec

__all__ = ["ResidualPart", "ResidualReport", "report_from_parts", "norms"]


def norms(values: np.ndarray, grid: GridSpec, mask=None) -> tuple[float, float]:
    """(max |v|, sqrt(sum |v|^2 hx hy)) over unmasked points; zeros if empty."""
    absvals = np.abs(np.asarray(values))
    if mask is not None:
        absvals = absvals[~np.asarray(mask, dtype=bool)]
    if absvals.size == 0:
        return 0.0, 0.0
    max_norm = float(np.max(absvals))
    l2_norm = float(np.sqrt(np.sum(absvals.astype(float) ** 2) * grid.hx * grid.hy))
    return max_norm, l2_norm


@dataclass(frozen=True)
class ResidualPart:
    name: str
    max_norm: float
    l2_norm: float


@dataclass(frozen=True)
class ResidualReport:
    name: str
    grid: GridSpec
    max_norm: float
    l2_norm: float
    masked_points: int
    parts: tuple = ()
    details: dict = dc_field(default_factory=dict)

    def part(self, name: str) -> ResidualPart:
        for p in self.parts:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "grid": {"nx": self.grid.nx, "ny": self.grid.ny,
                     "hx": self.grid.hx, "hy": self.grid.hy},
            "max_norm": self.max_norm,
            "l2_norm": self.l2_norm,
            "masked_points": self.masked_points,
            "parts": [{"name": p.name, "max_norm": p.max_norm, "l2_norm": p.l2_norm}
                      for p in self.parts],
            "details": dict(sorted(self.details.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def interior_ring_mask(grid: GridSpec, rings: int) -> np.ndarray:
    """Mask that excludes `rings` boundary layers."""
    m = np.zeros(grid.shape, dtype=bool)
    if rings > 0:
        m[:rings, :] = True
        m[-rings:, :] = True
        m[:, :rings] = True
        m[:, -rings:] = True
    return m


def report_from_parts(name: str, grid: GridSpec, parts, details=None,
                      exclude_rings: int = 0) -> ResidualReport:
    """Assemble a report from (part_name, values, mask) triples.

    The headline max_norm is the largest part max; l2_norm likewise. The
    masked count is taken over the union mask of all parts (boundary-ring
    exclusion, when requested, is not counted as masking).
    """
    ring = interior_ring_mask(grid, exclude_rings)
    out_parts = []
    union = np.zeros(grid.shape, dtype=bool)
    for pname, values, mask in parts:
        eff = ring.copy()
        if mask is not None:
            union |= np.asarray(mask, dtype=bool)
            eff |= np.asarray(mask, dtype=bool)
        mx, l2 = norms(values, grid, eff)
        out_parts.append(ResidualPart(pname, mx, l2))
    return ResidualReport(
        name=name,
        grid=grid,
        max_norm=max((p.max_norm for p in out_parts), default=0.0),
        l2_norm=max((p.l2_norm for p in out_parts), default=0.0),
        masked_points=int(np.count_nonzero(union)),
        parts=tuple(out_parts),
        details=details or {},
    )
