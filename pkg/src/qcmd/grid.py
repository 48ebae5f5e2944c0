"""Periodic uniform grids.

A grid stores per-axis lower edge, extent, point count and a stagger
offset.  Nodes sit at ``lower + (j + stagger) * h``; the default stagger of
0.5 keeps the coincident-nuclei hyperplanes of Coulomb systems strictly
between nodes, so the singular part of the potential is finite on every
node without special-casing.
"""

from dataclasses import dataclass

import numpy as np


def _as_tuple(value, dim, name):
    if np.isscalar(value):
        return (float(value),) * dim
    value = tuple(float(v) for v in value)
    if len(value) != dim:
        raise ValueError(f"{name} must have {dim} entries, got {len(value)}")
    return value


@dataclass(frozen=True)
class Grid:
    """Tensor-product periodic grid on a box.

    Parameters
    ----------
    dim : int
        Spatial dimension.
    lower : tuple of float
        Lower edge per axis.
    extent : tuple of float
        Box length per axis.
    npts : tuple of int
        Points per axis; each must be a power of two.
    stagger : tuple of float
        Node offset per axis in units of the spacing, in [0, 1).
    """

    dim: int
    lower: tuple
    extent: tuple
    npts: tuple
    stagger: tuple

    def __post_init__(self):
        for n in self.npts:
            if n < 2 or (n & (n - 1)) != 0:
                raise ValueError(f"point count {n} is not a power of two")
        for L in self.extent:
            if L <= 0:
                raise ValueError("extent must be positive")
        for s in self.stagger:
            if not 0.0 <= s < 1.0:
                raise ValueError("stagger must lie in [0, 1)")

    @classmethod
    def centered(cls, dim, extent, npts, stagger=0.5):
        """Box centered at the origin."""
        extent = _as_tuple(extent, dim, "extent")
        if np.isscalar(npts):
            npts = (int(npts),) * dim
        else:
            npts = tuple(int(n) for n in npts)
        stagger = _as_tuple(stagger, dim, "stagger")
        lower = tuple(-L / 2 for L in extent)
        return cls(dim, lower, extent, npts, stagger)

    @property
    def h(self):
        """Spacing per axis."""
        return tuple(L / n for L, n in zip(self.extent, self.npts))

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    @property
    def upper(self):
        return tuple(a + L for a, L in zip(self.lower, self.extent))

    def axis(self, i):
        """Node coordinates along axis ``i``."""
        h = self.h[i]
        return self.lower[i] + (np.arange(self.npts[i]) + self.stagger[i]) * h

    def axes(self):
        return [self.axis(i) for i in range(self.dim)]

    def mesh(self):
        """Coordinate arrays of shape ``npts`` (indexing='ij')."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self):
        """All node coordinates, shape ``(*npts, dim)``."""
        return np.stack(self.mesh(), axis=-1)

    def wavenumbers(self):
        """FFT-ordered angular wavenumbers per axis (2*pi*m/L)."""
        return [
            2.0 * np.pi * np.fft.fftfreq(n, d=h)
            for n, h in zip(self.npts, self.h)
        ]

    def ksq_mesh(self):
        """|k|^2 on the FFT-ordered grid, shape ``npts``."""
        ks = self.wavenumbers()
        out = np.zeros(self.npts)
        for i, k in enumerate(ks):
            shape = [1] * self.dim
            shape[i] = len(k)
            out = out + (k.reshape(shape)) ** 2
        return out

    def coarsen(self):
        """Every-other-node subgrid (used for grid-convergence indicators)."""
        npts = tuple(n // 2 for n in self.npts)
        stagger = tuple(s / 2 for s in self.stagger)
        return Grid(self.dim, self.lower, self.extent, npts, stagger)

    def to_dict(self):
        return {
            "dim": self.dim,
            "lower": list(self.lower),
            "extent": list(self.extent),
            "npts": list(self.npts),
            "stagger": list(self.stagger),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            int(d["dim"]),
            tuple(float(v) for v in d["lower"]),
            tuple(float(v) for v in d["extent"]),
            tuple(int(v) for v in d["npts"]),
            tuple(float(v) for v in d["stagger"]),
        )
