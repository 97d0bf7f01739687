"""Hyperbolic automorphisms of the 2-torus and their eigen frames."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ToralAutomorphism", "cat_map", "periodic_points"]


@dataclass(frozen=True)
class ToralAutomorphism:
    """An integer 2x2 matrix with det +1 and trace > 2.

    Eigenvalues satisfy lam_u > 1 > lam_s > 0 (the orientation-preserving
    hyperbolic case).  ``e_u`` and ``e_s`` are unit eigendirections; for the
    symmetric matrices this package constructs partitions for they are
    orthogonal, so (u, s) eigencoordinates are orthonormal.
    """

    matrix: tuple

    def __post_init__(self):
        B = np.asarray(self.matrix, dtype=np.int64)
        if B.shape != (2, 2):
            raise ValueError("need a 2x2 integer matrix")
        det = int(round(float(np.linalg.det(B))))
        tr = int(B[0, 0] + B[1, 1])
        if det != 1:
            raise ValueError(f"determinant must be +1, got {det}")
        if abs(tr) <= 2:
            raise ValueError(f"|trace| must exceed 2 for hyperbolicity, "
                             f"got {tr}")
        if tr < 0:
            raise ValueError("negative-trace case not supported; use the "
                             "matrix of the inverse orientation")
        disc = math.sqrt(tr * tr - 4.0)
        lam_u = (tr + disc) / 2.0
        lam_s = (tr - disc) / 2.0
        Bf = B.astype(float)

        def unit_eigvec(lam):
            # rows of (B - lam I) are parallel; take a kernel vector
            a, b = Bf[0, 0] - lam, Bf[0, 1]
            c, d = Bf[1, 0], Bf[1, 1] - lam
            v = np.array([-b, a]) if abs(a) + abs(b) > abs(c) + abs(d) \
                else np.array([-d, c])
            v = v / np.linalg.norm(v)
            if v[0] < 0 or (v[0] == 0 and v[1] < 0):
                v = -v
            return v

        e_u = unit_eigvec(lam_u)
        e_s = unit_eigvec(lam_s)
        for lam, v in ((lam_u, e_u), (lam_s, e_s)):
            res = np.linalg.norm(Bf @ v - lam * v)
            if res > 1e-12:
                raise ValueError(f"eigenvector residual {res:.2e} too large")
        object.__setattr__(self, "_B", B)
        object.__setattr__(self, "lam_u", float(lam_u))
        object.__setattr__(self, "lam_s", float(lam_s))
        object.__setattr__(self, "e_u", e_u)
        object.__setattr__(self, "e_s", e_s)

    @property
    def array(self) -> np.ndarray:
        return self._B

    def apply(self, xy: np.ndarray) -> np.ndarray:
        """B xy mod 1 (vectorized over leading axes)."""
        xy = np.asarray(xy, dtype=float)
        out = xy @ self._B.T.astype(float)
        return np.mod(out, 1.0)

    def apply_inverse(self, xy: np.ndarray) -> np.ndarray:
        B = self._B
        inv = np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]], dtype=float)
        xy = np.asarray(xy, dtype=float)
        return np.mod(xy @ inv.T, 1.0)

    def to_eigen(self, xy: np.ndarray) -> np.ndarray:
        """Orthonormal (u, s) coordinates of a plane point (not reduced)."""
        xy = np.asarray(xy, dtype=float)
        return np.stack([xy @ self.e_u, xy @ self.e_s], axis=-1)

    def from_eigen(self, us: np.ndarray) -> np.ndarray:
        us = np.asarray(us, dtype=float)
        return (us[..., :1] * self.e_u + us[..., 1:2] * self.e_s)

    def stable_component(self, diff: np.ndarray) -> np.ndarray:
        return np.asarray(diff, float) @ self.e_s

    def unstable_component(self, diff: np.ndarray) -> np.ndarray:
        return np.asarray(diff, float) @ self.e_u


def cat_map() -> ToralAutomorphism:
    """The default base system: rows (2,1),(1,1)."""
    return ToralAutomorphism(((2, 1), (1, 1)))


def periodic_points(auto: ToralAutomorphism, period: int) -> list:
    """All points with B^period x = x mod 1, as rows in [0,1)^2.

    Solves (B^n - I) x in Z^2 by enumerating the integer vectors in the
    image of the unit square.
    """
    Bn = np.linalg.matrix_power(auto.array, period).astype(np.int64)
    Mt = Bn - np.eye(2, dtype=np.int64)
    det = int(round(float(np.linalg.det(Mt.astype(float)))))
    if det == 0:
        raise ValueError("B^n - I is singular")
    inv = np.array([[Mt[1, 1], -Mt[0, 1]], [-Mt[1, 0], Mt[0, 0]]],
                   dtype=float) / det
    pts = []
    bound = int(np.abs(Mt).sum()) + 1
    for a in range(-bound, bound + 1):
        for b in range(-bound, bound + 1):
            x = inv @ np.array([a, b], dtype=float)
            if -1e-12 <= x[0] < 1.0 - 1e-12 and -1e-12 <= x[1] < 1.0 - 1e-12:
                pts.append(np.mod(x, 1.0))
    uniq = []
    for p in pts:
        if not any(np.allclose(p, q, atol=1e-10) for q in uniq):
            uniq.append(p)
    return uniq
