"""Space-time grid on (0, T) x T^d with an optional zero-thickness layer at t = T."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform cell grid on ``(0, T) x T^d``, torus side ``2*pi`` per axis.

    Interior cells are ordered row-major over ``(it, ix_1, ..., ix_d)``.  When
    ``includes_final_layer`` is set, ``nx**d`` extra cells of volume zero sit at
    ``t = T``; they can carry concentration mass but no oscillation measure.
    """

    T: float
    d: int
    nt: int
    nx: int
    includes_final_layer: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"T must be positive and finite, got {self.T!r}")
        for name in ("d", "nt", "nx"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "nt", int(self.nt))
        object.__setattr__(self, "nx", int(self.nx))

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def h(self) -> float:
        return TWO_PI / self.nx

    @property
    def space_volume(self) -> float:
        """Volume of one spatial cell, ``h**d``."""
        return self.h**self.d

    @property
    def cell_volume(self) -> float:
        return self.dt * self.space_volume

    @property
    def torus_volume(self) -> float:
        return TWO_PI**self.d

    @property
    def total_volume(self) -> float:
        return self.T * self.torus_volume

    @property
    def n_space(self) -> int:
        return self.nx**self.d

    @property
    def n_cells(self) -> int:
        return self.nt * self.n_space

    @property
    def n_layer(self) -> int:
        return self.n_space if self.includes_final_layer else 0

    @property
    def n_lambda_cells(self) -> int:
        """Number of cells that may carry concentration mass."""
        return self.n_cells + self.n_layer

    @property
    def resolution(self) -> float:
        """Dimensionless mesh size ``max(1/nt, 1/nx)``."""
        return max(1.0 / self.nt, 1.0 / self.nx)

    @cached_property
    def t_centers(self) -> np.ndarray:
        t = (np.arange(self.nt) + 0.5) * self.dt
        t.flags.writeable = False
        return t

    @cached_property
    def x_centers(self) -> np.ndarray:
        """Spatial cell centers, shape ``(n_space, d)``."""
        axis = (np.arange(self.nx) + 0.5) * self.h
        mesh = np.meshgrid(*([axis] * self.d), indexing="ij")
        x = np.stack([m.ravel() for m in mesh], axis=-1)
        x.flags.writeable = False
        return x

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Centers of the interior cells as ``(t, x)`` with shapes ``(n_cells,)``, ``(n_cells, d)``."""
        t = np.repeat(self.t_centers, self.n_space)
        x = np.tile(self.x_centers, (self.nt, 1))
        return t, x

    def lambda_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Centers of all cells able to carry concentration, final layer at ``t = T`` last."""
        t, x = self.cell_centers()
        if not self.includes_final_layer:
            return t, x
        t = np.concatenate([t, np.full(self.n_space, self.T)])
        x = np.concatenate([x, self.x_centers])
        return t, x

    def flat_index(self, it: int, ix) -> int:
        """Flat cell index of time slot ``it`` (``nt`` is the final layer) and spatial multi-index ``ix``."""
        ix = tuple(int(i) for i in np.atleast_1d(ix))
        if len(ix) != self.d:
            raise ValueError(f"spatial index needs {self.d} entries, got {len(ix)}")
        if any(i < 0 or i >= self.nx for i in ix):
            raise IndexError(f"spatial index {ix} out of range for nx={self.nx}")
        last = self.nt if self.includes_final_layer else self.nt - 1
        if it < 0 or it > last:
            raise IndexError(f"time index {it} out of range [0, {last}]")
        return it * self.n_space + int(np.ravel_multi_index(ix, (self.nx,) * self.d))

    def unflat_index(self, index: int) -> tuple[int, tuple[int, ...]]:
        if index < 0 or index >= self.n_lambda_cells:
            raise IndexError(f"cell index {index} out of range")
        it, rest = divmod(int(index), self.n_space)
        ix = np.unravel_index(rest, (self.nx,) * self.d)
        return it, tuple(int(i) for i in ix)

    def slice_of(self, values: np.ndarray) -> np.ndarray:
        """Reshape a per-interior-cell array to ``(nt, n_space, ...)``."""
        values = np.asarray(values)
        return values[: self.n_cells].reshape((self.nt, self.n_space) + values.shape[1:])

    def refined(self, factor: int = 2) -> "SpaceTimeGrid":
        return SpaceTimeGrid(self.T, self.d, self.nt * factor, self.nx * factor, self.includes_final_layer)
