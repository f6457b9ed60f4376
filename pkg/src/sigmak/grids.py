"""Structured grids with masked domains and second-order finite differences."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = ["GridFunction", "box_grid"]


@dataclass
class GridFunction:
    """Samples of a scalar function on a uniform lattice, optionally masked.

    Attributes
    ----------
    lo : array, shape (d,)
        Coordinates of the first lattice node per axis.
    spacing : array, shape (d,)
        Positive lattice spacing per axis.
    values : array, shape (m1, ..., md)
        Sample values; entries outside the mask are ignored.
    mask : bool array or None
        True marks nodes inside the domain.  None means the full box.

    Gradient/Hessian accessors are second-order central in the interior and
    one-sided second-order where the stencil would leave the mask.
    """

    lo: np.ndarray
    spacing: np.ndarray
    values: np.ndarray
    mask: np.ndarray | None = None
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        self.spacing = np.atleast_1d(np.asarray(self.spacing, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != self.lo.size or self.lo.size != self.spacing.size:
            raise DomainError("lo, spacing, and values dimensions disagree")
        if np.any(self.spacing <= 0):
            raise DomainError("spacing must be positive")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.values.shape:
                raise DomainError("mask shape must match values shape")

    # -- basic geometry -------------------------------------------------

    @property
    def d(self):
        return self.values.ndim

    @property
    def shape(self):
        return self.values.shape

    def axes(self):
        return [
            self.lo[a] + self.spacing[a] * np.arange(self.shape[a])
            for a in range(self.d)
        ]

    def node(self, idx):
        """Coordinates of the lattice node at multi-index ``idx``."""
        return self.lo + self.spacing * np.asarray(idx, dtype=float)

    def points(self):
        """All node coordinates, shape (N, d), C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def valid(self):
        """Boolean field of usable nodes (inside mask and finite)."""
        ok = np.isfinite(self.values)
        if self.mask is not None:
            ok &= self.mask
        return ok

    def nearest_index(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.rint((x - self.lo) / self.spacing).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.array(self.shape)):
            raise DomainError(f"point {x} outside the grid")
        return tuple(idx)

    # -- pointwise finite differences -----------------------------------

    def _valid_at(self, idx):
        idx = np.asarray(idx)
        if np.any(idx < 0) or np.any(idx >= np.array(self.shape)):
            return False
        ok = self.valid()
        return bool(ok[tuple(idx)])

    def _axis_values(self, idx, axis, offsets):
        """Values along one axis at the given offsets, or None if any is unusable."""
        out = []
        base = np.asarray(idx)
        for off in offsets:
            j = base.copy()
            j[axis] += off
            if not self._valid_at(j):
                return None
            out.append(self.values[tuple(j)])
        return out

    def _d1(self, idx, axis):
        h = self.spacing[axis]
        v = self._axis_values(idx, axis, (-1, 1))
        if v is not None:
            return (v[1] - v[0]) / (2.0 * h)
        v = self._axis_values(idx, axis, (0, 1, 2))
        if v is not None:
            return (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
        v = self._axis_values(idx, axis, (0, -1, -2))
        if v is not None:
            return (3.0 * v[0] - 4.0 * v[1] + v[2]) / (2.0 * h)
        raise DomainError(f"no usable first-difference stencil at {tuple(idx)} axis {axis}")

    def _d2(self, idx, axis):
        h2 = self.spacing[axis] ** 2
        v = self._axis_values(idx, axis, (-1, 0, 1))
        if v is not None:
            return (v[0] - 2.0 * v[1] + v[2]) / h2
        v = self._axis_values(idx, axis, (0, 1, 2, 3))
        if v is not None:
            return (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
        v = self._axis_values(idx, axis, (0, -1, -2, -3))
        if v is not None:
            return (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
        raise DomainError(f"no usable second-difference stencil at {tuple(idx)} axis {axis}")

    def gradient_at(self, idx):
        return np.array([self._d1(idx, a) for a in range(self.d)])

    def hessian_at(self, idx):
        """Second-order Hessian at a node; mixed terms difference the gradient field."""
        d = self.d
        H = np.zeros((d, d))
        for a in range(d):
            H[a, a] = self._d2(idx, a)
        for a in range(d):
            for b in range(a + 1, d):
                H[a, b] = H[b, a] = self._mixed(idx, a, b)
        return H

    def _mixed(self, idx, a, b):
        base = np.asarray(idx)

        def grad_b(off_a):
            j = base.copy()
            j[a] += off_a
            return self._d1(j, b)

        h = self.spacing[a]
        try:
            return (grad_b(1) - grad_b(-1)) / (2.0 * h)
        except DomainError:
            pass
        try:
            return (-3.0 * grad_b(0) + 4.0 * grad_b(1) - grad_b(2)) / (2.0 * h)
        except DomainError:
            return (3.0 * grad_b(0) - 4.0 * grad_b(-1) + grad_b(-2)) / (2.0 * h)

    # -- field finite differences ---------------------------------------

    def gradient_field(self):
        """Per-axis derivative fields, shape (d, m1, ..., md); nan where unusable."""
        return np.stack([self._d1_field(a) for a in range(self.d)])

    def _shift(self, arr, axis, off):
        """Array shifted so slot i holds arr[i + off]; out-of-range slots invalid."""
        out = np.full_like(arr, np.nan if arr.dtype.kind == "f" else False)
        src = [slice(None)] * arr.ndim
        dst = [slice(None)] * arr.ndim
        if off > 0:
            src[axis] = slice(off, None)
            dst[axis] = slice(None, -off)
        elif off < 0:
            src[axis] = slice(None, off)
            dst[axis] = slice(-off, None)
        else:
            return arr.copy()
        out[tuple(dst)] = arr[tuple(src)]
        return out

    def _d1_field(self, axis):
        h = self.spacing[axis]
        ok = self.valid()
        v = np.where(ok, self.values, np.nan)
        get = lambda off: self._shift(v, axis, off)
        vp, vm = get(1), get(-1)
        vpp, vmm = get(2), get(-2)
        central = (vp - vm) / (2.0 * h)
        fwd = (-3.0 * v + 4.0 * vp - vpp) / (2.0 * h)
        bwd = (3.0 * v - 4.0 * vm + vmm) / (2.0 * h)
        out = np.where(np.isfinite(central), central, np.where(np.isfinite(fwd), fwd, bwd))
        out[~ok] = np.nan
        return out

    def hessian_field(self):
        """Hessian fields, shape (d, d, m1, ..., md); nan where unusable."""
        d = self.d
        out = np.empty((d, d) + self.shape)
        grads = [self._d1_field(a) for a in range(d)]
        for a in range(d):
            out[a, a] = self._d2_field(a)
        for a in range(d):
            ga = GridFunction(self.lo, self.spacing, grads[a], self.mask)
            for b in range(a + 1, d):
                mixed = ga._d1_field(b)
                out[a, b] = mixed
                out[b, a] = mixed
        return out

    def _d2_field(self, axis):
        h2 = self.spacing[axis] ** 2
        ok = self.valid()
        v = np.where(ok, self.values, np.nan)
        get = lambda off: self._shift(v, axis, off)
        vp, vm, vpp, vmm = get(1), get(-1), get(2), get(-2)
        vppp, vmmm = get(3), get(-3)
        central = (vp - 2.0 * v + vm) / h2
        fwd = (2.0 * v - 5.0 * vp + 4.0 * vpp - vppp) / h2
        bwd = (2.0 * v - 5.0 * vm + 4.0 * vmm - vmmm) / h2
        out = np.where(np.isfinite(central), central, np.where(np.isfinite(fwd), fwd, bwd))
        out[~ok] = np.nan
        return out

    # -- interpolation ---------------------------------------------------

    def interpolate(self, pts):
        """Multilinear interpolation at points (..., d); nan outside the box."""
        from scipy.interpolate import RegularGridInterpolator

        if self._interp is None:
            vals = np.where(self.valid(), self.values, np.nan)
            self._interp = RegularGridInterpolator(
                self.axes(), vals, method="linear", bounds_error=False, fill_value=np.nan
            )
        pts = np.asarray(pts, dtype=float)
        if self.d == 1 and pts.ndim >= 1 and pts.shape[-1] != 1:
            pts = pts[..., None]
        return self._interp(pts)

    # -- serialization ----------------------------------------------------

    def descriptor(self):
        return {
            "lo": self.lo.tolist(),
            "spacing": self.spacing.tolist(),
            "shape": list(self.shape),
            "has_mask": self.mask is not None,
        }

    def to_csv(self, path):
        """One sample per row: coordinates, value, inside flag."""
        pts = self.points()
        vals = self.values.ravel()
        inside = (self.mask.ravel() if self.mask is not None else np.ones(vals.size, bool))
        cols = [pts[:, a] for a in range(self.d)] + [vals, inside.astype(float)]
        data = np.column_stack(cols)
        header = ",".join([f"x{a + 1}" for a in range(self.d)] + ["value", "inside"])
        meta = json.dumps(self.descriptor())
        np.savetxt(path, data, delimiter=",", header=f"{meta}\n{header}", comments="# ")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            meta_line = fh.readline()
        meta = json.loads(meta_line.lstrip("# ").strip())
        data = np.loadtxt(path, delimiter=",", skiprows=2)
        data = np.atleast_2d(data)
        shape = tuple(meta["shape"])
        values = data[:, -2].reshape(shape)
        mask = data[:, -1].reshape(shape).astype(bool) if meta["has_mask"] else None
        return cls(np.array(meta["lo"]), np.array(meta["spacing"]), values, mask)


def box_grid(lo, hi, spacing):
    """Node axes covering [lo, hi] at the given spacing (hi rounded outward)."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    spacing = np.broadcast_to(np.atleast_1d(np.asarray(spacing, dtype=float)), lo.shape)
    counts = np.maximum(2, np.ceil((hi - lo) / spacing - 1e-12).astype(int) + 1)
    return lo, spacing.copy(), tuple(counts)
