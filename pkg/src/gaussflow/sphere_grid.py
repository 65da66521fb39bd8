"""Spectral quadrature grids on the unit circle and unit sphere.

Nodes, quadrature weights, and differentiation data for smooth scalar
fields sampled on S^1 or S^2. Differentiation is spectral throughout:
Fourier series on the circle, real spherical harmonics up to a fixed
bandlimit on the sphere. Fields resolved below the bandlimit are
differentiated to near machine accuracy.

The circle grid uses 4L uniform angles. The sphere grid pairs L+1
Gauss-Legendre colatitudes with 2L+2 equally spaced longitudes, so that
every node has its exact antipode on the grid and quadrature integrates
products of harmonics up to combined degree 2L. There are no nodes at
the poles; point evaluation anywhere (poles included) goes through
coefficient space via `evaluate_at`.

Grids are immutable after construction and safe to share across
threads; `build_grid` memoizes construction per (dim, bandlimit).
"""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.special import roots_legendre

__all__ = [
    "SphereGrid",
    "build_grid",
    "integrate",
    "average",
    "analyze",
    "synthesize",
    "project",
    "frame_hessian",
    "spectral_tail",
    "evaluate_at",
    "sphere_area",
    "ball_volume",
]

# Fraction of energy allowed in the top decile of retained modes before
# frame_hessian flags the field as under-resolved.
TAIL_WARN_THRESHOLD = 1e-8
_TAIL_MESSAGE = (
    "field is marginally resolved: top 10% of spectral modes carry more "
    "than 1e-8 of the energy"
)


def sphere_area(dim: int) -> float:
    """Total measure of S^dim: 2*pi for the circle, 4*pi for the sphere."""
    _check_dim(dim)
    return 2.0 * np.pi if dim == 1 else 4.0 * np.pi


def ball_volume(dim: int) -> float:
    """Volume of the unit ball in R^(dim+1)."""
    return sphere_area(dim) / (dim + 1)


def _check_dim(dim: int) -> None:
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim!r}")


class SphereGrid:
    """Quadrature nodes, weights and spectral differentiation data on S^dim.

    Attributes
    ----------
    dim : int
        1 for the circle, 2 for the sphere.
    bandlimit : int
        Maximum retained frequency / harmonic degree L.
    nodes : ndarray, shape (node_count, dim+1)
        Unit direction vectors.
    weights : ndarray, shape (node_count,)
        Positive quadrature weights summing to the sphere area.
    antipode : ndarray of int, shape (node_count,)
        Index of the node opposite to each node.
    thetas, phis : ndarray
        Angular coordinates of the nodes (phis is None on the circle).
    h_min : float
        Smallest spacing between neighbouring nodes (step-size control).

    Use :func:`build_grid` rather than the constructor; grids are cached.
    """

    def __init__(self, dim: int, bandlimit: int):
        _check_dim(dim)
        if bandlimit < 4:
            raise ValueError(f"bandlimit must be >= 4, got {bandlimit}")
        self.dim = dim
        self.bandlimit = bandlimit
        if dim == 1:
            self._init_circle(bandlimit)
        else:
            self._init_sphere(bandlimit)
        for arr in (self.nodes, self.weights, self.antipode, self.thetas):
            arr.setflags(write=False)

    # -- construction -------------------------------------------------

    def _init_circle(self, L: int) -> None:
        N = 4 * L
        theta = 2.0 * np.pi * np.arange(N) / N
        self.thetas = theta
        self.phis = None
        self.nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        self.weights = np.full(N, 2.0 * np.pi / N)
        self.antipode = (np.arange(N) + N // 2) % N
        self.tangent = np.column_stack([-np.sin(theta), np.cos(theta)])
        self.tangent.setflags(write=False)
        self.h_min = 2.0 * np.pi / N
        # coefficient layout: [const, cos 1..L, sin 1..L], orthonormal
        self.coeff_count = 2 * L + 1
        self._degrees = np.concatenate([[0], np.arange(1, L + 1), np.arange(1, L + 1)])

    def _init_sphere(self, L: int) -> None:
        nt, nphi = L + 1, 2 * L + 2
        x_gl, w_gl = roots_legendre(nt)
        x_gl = 0.5 * (x_gl - x_gl[::-1])  # enforce exact symmetry of roots
        ct1 = x_gl[::-1]                  # cos(theta), theta ascending
        wt1 = 0.5 * (w_gl + w_gl[::-1])[::-1]
        theta1 = np.arccos(ct1)
        phi1 = 2.0 * np.pi * np.arange(nphi) / nphi

        theta = np.repeat(theta1, nphi)
        phi = np.tile(phi1, nt)
        st, ct = np.sin(theta), np.cos(theta)
        cp, sp = np.cos(phi), np.sin(phi)
        self.thetas = theta
        self.phis = phi
        self.phis.setflags(write=False)
        self.nodes = np.column_stack([st * cp, st * sp, ct])
        self.weights = np.repeat(wt1, nphi) * (2.0 * np.pi / nphi)

        j = np.repeat(np.arange(nt), nphi)
        k = np.tile(np.arange(nphi), nt)
        self.antipode = (nt - 1 - j) * nphi + (k + nphi // 2) % nphi

        # orthonormal tangent frame of spherical coordinates
        self.tangent = np.column_stack([ct * cp, ct * sp, -st])    # e_theta
        self.tangent2 = np.column_stack([-sp, cp, np.zeros_like(sp)])  # e_phi
        self.tangent.setflags(write=False)
        self.tangent2.setflags(write=False)

        dtheta = np.diff(theta1)
        self.h_min = float(min(dtheta.min(), np.sin(theta1).min() * 2.0 * np.pi / nphi))

        self.coeff_count = (L + 1) ** 2
        degs = np.zeros(self.coeff_count, dtype=int)
        for ell in range(L + 1):
            degs[ell * ell: (ell + 1) ** 2] = ell
        self._degrees = degs

        self._build_sphere_matrices(L, theta1, phi1, st, ct)

    def _build_sphere_matrices(self, L, theta1, phi1, st_nodes, ct_nodes) -> None:
        nt, nphi = theta1.size, phi1.size
        M, B = nt * nphi, (L + 1) ** 2
        P, dP, d2P = _legendre_tables(L, theta1, derivatives=True)

        Y = np.zeros((M, B))
        Yt = np.zeros((M, B))
        Yp = np.zeros((M, B))
        Ytt = np.zeros((M, B))
        Ytp = np.zeros((M, B))
        Ypp = np.zeros((M, B))
        for ell in range(L + 1):
            for m in range(-ell, ell + 1):
                b = ell * ell + ell + m
                am = abs(m)
                tr, dtr = _trig_pair(m, phi1)
                Y[:, b] = np.outer(P[ell, am], tr).ravel()
                Yt[:, b] = np.outer(dP[ell, am], tr).ravel()
                Yp[:, b] = np.outer(P[ell, am], dtr).ravel()
                Ytt[:, b] = np.outer(d2P[ell, am], tr).ravel()
                Ytp[:, b] = np.outer(dP[ell, am], dtr).ravel()
                Ypp[:, b] = -am * am * Y[:, b]

        inv_st = (1.0 / st_nodes)[:, None]
        cot = (ct_nodes / st_nodes)[:, None]
        G1 = Yt
        G2 = Yp * inv_st
        H11 = Ytt
        H12 = (Ytp - cot * Yp) * inv_st
        H22 = Ypp * inv_st * inv_st + cot * Yt
        # stacked synthesis: rows [value; grad_theta; grad_phi; H11; H12; H22]
        self._synth = np.ascontiguousarray(np.vstack([Y, G1, G2, H11, H12, H22]))
        self._analysis = np.ascontiguousarray((Y * self.weights[:, None]).T)
        self._synth.setflags(write=False)
        self._analysis.setflags(write=False)

    # -- small conveniences -------------------------------------------

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    def __repr__(self) -> str:  # pragma: no cover
        return f"SphereGrid(dim={self.dim}, bandlimit={self.bandlimit}, nodes={self.node_count})"


def _trig_pair(m: int, phi: NDArray) -> tuple[NDArray, NDArray]:
    """Longitude factor of the real harmonic of order m and its derivative."""
    am = abs(m)
    if m == 0:
        return np.ones_like(phi), np.zeros_like(phi)
    if m > 0:
        c = np.sqrt(2.0) * np.cos(am * phi)
        return c, -am * np.sqrt(2.0) * np.sin(am * phi)
    s = np.sqrt(2.0) * np.sin(am * phi)
    return s, am * np.sqrt(2.0) * np.cos(am * phi)


def _legendre_tables(L: int, theta: NDArray, derivatives: bool = False):
    """Fully normalized associated Legendre values P[l, m] at the given
    colatitudes, such that P[l,m](theta) * sqrt(2)^{m>0} * cos/sin(m phi)
    is orthonormal on the sphere. Optionally also d/dtheta and d2/dtheta2
    (those require sin(theta) != 0).
    """
    nt = theta.size
    ct, st = np.cos(theta), np.sin(theta)
    P = np.zeros((L + 1, L + 1, nt))
    P[0, 0] = 1.0 / np.sqrt(4.0 * np.pi)
    for m in range(1, L + 1):
        P[m, m] = np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * st * P[m - 1, m - 1]
    for m in range(L):
        P[m + 1, m] = np.sqrt(2.0 * m + 3.0) * ct * P[m, m]
    for m in range(L + 1):
        for ell in range(m + 2, L + 1):
            a = np.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
            b = np.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1.0) ** 2 - 1.0))
            P[ell, m] = a * (ct * P[ell - 1, m] - b * P[ell - 2, m])
    if not derivatives:
        return P
    dP = np.zeros_like(P)
    d2P = np.zeros_like(P)
    for m in range(L + 1):
        for ell in range(m, L + 1):
            if ell == 0:
                continue
            c = np.sqrt((ell * ell - m * m) * (2.0 * ell + 1.0) / (2.0 * ell - 1.0))
            low = P[ell - 1, m] if ell - 1 >= m else 0.0
            dP[ell, m] = (ell * ct * P[ell, m] - c * low) / st
            d2P[ell, m] = -ct / st * dP[ell, m] - (ell * (ell + 1.0) - m * m / st**2) * P[ell, m]
    return P, dP, d2P


@lru_cache(maxsize=8)
def _build_grid_cached(dim: int, bandlimit: int) -> SphereGrid:
    return SphereGrid(dim, bandlimit)


def build_grid(dim: int, bandlimit: int) -> SphereGrid:
    """Return the (cached) grid for S^dim with the given bandlimit.

    Parameters
    ----------
    dim : int
        1 or 2.
    bandlimit : int
        Maximum retained frequency/degree; must be >= 4.
    """
    _check_dim(dim)
    if bandlimit < 4:
        raise ValueError(f"bandlimit must be >= 4, got {bandlimit}")
    return _build_grid_cached(dim, int(bandlimit))


def _check_values(grid: SphereGrid, values: NDArray) -> NDArray:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.node_count,):
        raise ValueError(
            f"values shape {values.shape} does not match grid with {grid.node_count} nodes"
        )
    return values


def integrate(grid: SphereGrid, values: NDArray) -> float:
    """Quadrature of per-node values against the sphere measure."""
    return float(grid.weights @ _check_values(grid, values))


def average(grid: SphereGrid, values: NDArray) -> float:
    """Mean of per-node values over the sphere (integral / total area)."""
    return integrate(grid, values) / sphere_area(grid.dim)


def analyze(grid: SphereGrid, values: NDArray) -> NDArray:
    """Expand node values in the orthonormal spectral basis.

    Circle layout: [constant, cos(1..L), sin(1..L)] scaled to unit L2 norm;
    sphere layout: real harmonics packed as b = l^2 + l + m.
    """
    values = _check_values(grid, values)
    if grid.dim == 2:
        return grid._analysis @ values
    N, L = grid.node_count, grid.bandlimit
    ch = np.fft.rfft(values)
    out = np.empty(2 * L + 1)
    out[0] = ch[0].real * np.sqrt(2.0 * np.pi) / N
    out[1: L + 1] = 2.0 * ch[1: L + 1].real * np.sqrt(np.pi) / N
    out[L + 1:] = -2.0 * ch[1: L + 1].imag * np.sqrt(np.pi) / N
    return out


def synthesize(grid: SphereGrid, coeffs: NDArray) -> NDArray:
    """Evaluate a coefficient vector (layout as in `analyze`) on the nodes."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (grid.coeff_count,):
        raise ValueError(f"expected {grid.coeff_count} coefficients, got {coeffs.shape}")
    if grid.dim == 2:
        return grid._synth[: grid.node_count] @ coeffs
    N, L = grid.node_count, grid.bandlimit
    ch = np.zeros(N // 2 + 1, dtype=complex)
    ch[0] = coeffs[0] * N / np.sqrt(2.0 * np.pi)
    ch[1: L + 1] = (coeffs[1: L + 1] - 1j * coeffs[L + 1:]) * N / (2.0 * np.sqrt(np.pi))
    return np.fft.irfft(ch, n=N)


def project(grid: SphereGrid, values: NDArray) -> NDArray:
    """Project node values onto the space resolved by the bandlimit."""
    values = _check_values(grid, values)
    if grid.dim == 2:
        return grid._synth[: grid.node_count] @ (grid._analysis @ values)
    c = np.fft.rfft(values)
    c[grid.bandlimit + 1:] = 0.0
    return np.fft.irfft(c, n=grid.node_count)


def _tail_fraction_circle(grid: SphereGrid, ch: NDArray) -> float:
    power = np.abs(ch) ** 2
    total = power.sum()
    if total == 0.0:
        return 0.0
    start = int(np.ceil(0.9 * grid.bandlimit))
    return float(power[start:].sum() / total)


def _tail_fraction_sphere(grid: SphereGrid, c: NDArray) -> float:
    power = c * c
    total = power.sum()
    if total == 0.0:
        return 0.0
    start = int(np.ceil(0.9 * grid.bandlimit))
    return float(power[grid._degrees >= start].sum() / total)


def spectral_tail(grid: SphereGrid, values: NDArray) -> float:
    """Fraction of spectral energy in the top 10% of retained modes.

    Values near 1e-8 or larger indicate the field is not resolved well
    enough for curvature work at this bandlimit.
    """
    values = _check_values(grid, values)
    if grid.dim == 1:
        return _tail_fraction_circle(grid, np.fft.rfft(values))
    return _tail_fraction_sphere(grid, grid._analysis @ values)


def frame_hessian(grid: SphereGrid, values: NDArray) -> tuple[NDArray, NDArray]:
    """Covariant Hessian and gradient in the orthonormal spherical frame.

    Parameters
    ----------
    grid : SphereGrid
    values : ndarray, shape (node_count,)
        Samples of a function resolved below the bandlimit.

    Returns
    -------
    hessian : ndarray, shape (node_count, dim, dim)
        On the circle this is u''(theta); on the sphere the components
        are H11 = u_tt, H12 = (u_tp - cot(t) u_p)/sin(t),
        H22 = u_pp/sin^2(t) + cot(t) u_t.
    gradient : ndarray, shape (node_count, dim)
        (u_t, u_p/sin(t)) on the sphere; u' on the circle.

    Warns with a fixed RuntimeWarning when the spectral tail exceeds
    1e-8 of the energy (marginally resolved input).
    """
    values = _check_values(grid, values)
    M = grid.node_count
    if grid.dim == 1:
        ch = np.fft.rfft(values)
        if _tail_fraction_circle(grid, ch) > TAIL_WARN_THRESHOLD:
            warnings.warn(_TAIL_MESSAGE, RuntimeWarning)
        k = np.arange(ch.size)
        der = np.fft.irfft(np.vstack([1j * k * ch, -(k * k) * ch]), n=M, axis=-1)
        return der[1].reshape(M, 1, 1), der[0].reshape(M, 1)
    c = grid._analysis @ values
    if _tail_fraction_sphere(grid, c) > TAIL_WARN_THRESHOLD:
        warnings.warn(_TAIL_MESSAGE, RuntimeWarning)
    q = (grid._synth @ c).reshape(6, M)
    grad = np.stack([q[1], q[2]], axis=1)
    hess = np.empty((M, 2, 2))
    hess[:, 0, 0] = q[3]
    hess[:, 0, 1] = q[4]
    hess[:, 1, 0] = q[4]
    hess[:, 1, 1] = q[5]
    return hess, grad


def evaluate_at(grid: SphereGrid, values: NDArray, thetas: NDArray,
                phis: NDArray | None = None) -> NDArray:
    """Evaluate the bandlimited interpolant of node values at arbitrary angles.

    On the sphere `thetas`/`phis` are colatitude/longitude; the poles are
    admissible (evaluation goes through coefficient space).
    """
    values = _check_values(grid, values)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if grid.dim == 1:
        L, N = grid.bandlimit, grid.node_count
        ch = np.fft.rfft(values)
        k = np.arange(1, L + 1)
        out = np.full(thetas.shape, ch[0].real / N)
        cos_kt = np.cos(np.outer(thetas, k))
        sin_kt = np.sin(np.outer(thetas, k))
        out += 2.0 / N * (cos_kt @ ch[1: L + 1].real - sin_kt @ ch[1: L + 1].imag)
        return out
    if phis is None:
        raise ValueError("phis required for sphere grids")
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    c = grid._analysis @ values
    L = grid.bandlimit
    P = _legendre_tables(L, thetas, derivatives=False)
    out = np.zeros(thetas.shape)
    for ell in range(L + 1):
        for m in range(-ell, ell + 1):
            b = ell * ell + ell + m
            if c[b] == 0.0:
                continue
            tr, _ = _trig_pair(m, phis)
            out += c[b] * P[ell, abs(m)] * tr
    return out
