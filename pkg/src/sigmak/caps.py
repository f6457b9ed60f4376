"""Spherical caps, direction meshes, and rotations used by barrier and trough code."""
from __future__ import annotations

import numpy as np

from .errors import DomainError


def geodesic_distance(a, b):
    """Great-circle distance between unit vectors (broadcasts over leading axes)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    return np.arccos(dot)


def cap_support(x, center, delta):
    """Support function of a closed spherical cap, sup over cap of <xi, x>.

    The cap is the set of unit vectors within geodesic distance ``delta`` of
    ``center``.  The supremum is attained by rotating x/|x| toward the center
    until it enters the cap, so the value is |x| * cos(max(theta - delta, 0))
    with theta the angle between x and the center.  Positively homogeneous of
    degree one, 1-Lipschitz for delta <= pi/2 caps contained in a hemisphere.

    Parameters
    ----------
    x : array, shape (..., n)
        Evaluation points (any radius, origin allowed).
    center : array, shape (n,)
        Unit cap center.
    delta : float
        Cap radius in (0, pi).

    Returns
    -------
    array, shape (...,)
    """
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    out = np.zeros_like(r)
    nz = r > 0
    if np.any(nz):
        xhat = x[nz] / r[nz][..., None]
        theta = geodesic_distance(xhat, center)
        out[nz] = r[nz] * np.cos(np.maximum(theta - delta, 0.0))
    return out


def unit(v):
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise DomainError("cannot normalize the zero vector")
    return v / nrm


def rotation_to_axis(center, axis=None):
    """Proper rotation R with R @ center = axis (default: first basis vector).

    For center == -axis the rotation is a half turn in the (axis, e2) plane,
    which is proper (det = +1) in any dimension >= 2.
    """
    c = unit(center)
    n = c.shape[0]
    if axis is None:
        axis = np.zeros(n)
        axis[0] = 1.0
    a = unit(np.asarray(axis, dtype=float))
    dot = float(np.dot(c, a))
    if dot > 1.0 - 1e-14:
        return np.eye(n)
    if dot < -1.0 + 1e-14:
        # half turn in span{a, b} for any b orthogonal to a: proper in every dimension
        b = np.zeros(n)
        b[1 if abs(a[0]) > 0.9 else 0] = 1.0
        b = unit(b - np.dot(b, a) * a)
        return np.eye(n) - 2.0 * np.outer(a, a) - 2.0 * np.outer(b, b)
    # Rotation in span{c, a} sending c to a, identity on the complement.
    u = c
    w = unit(a - dot * c)
    cos_t = dot
    sin_t = float(np.dot(a, w))
    R = np.eye(n)
    R += (cos_t - 1.0) * (np.outer(u, u) + np.outer(w, w))
    R += sin_t * (np.outer(w, u) - np.outer(u, w))
    return R


def fibonacci_sphere(m):
    """m nearly uniform points on the 2-sphere (golden-angle spiral)."""
    i = np.arange(m, dtype=float) + 0.5
    z = 1.0 - 2.0 * i / m
    phi = np.pi * (1.0 + np.sqrt(5.0)) * i
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)


def circle_mesh(m):
    """m uniform points on the unit circle."""
    ang = 2.0 * np.pi * np.arange(m) / m
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def sphere_mesh(n, m):
    """Direction mesh on S^{n-1}: uniform circle for n = 2, Fibonacci for n = 3.

    Higher dimensions fall back to a seeded normalized-Gaussian cloud, which
    is deterministic for fixed (n, m).
    """
    if n == 2:
        return circle_mesh(m)
    if n == 3:
        return fibonacci_sphere(m)
    if n < 2:
        raise DomainError(f"direction meshes need n >= 2, got n={n}")
    rng = np.random.default_rng(1009 * n + m)
    pts = rng.standard_normal((m, n))
    return pts / np.linalg.norm(pts, axis=-1, keepdims=True)
