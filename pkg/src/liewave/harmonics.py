"""Harmonic analysis on the flat torus T^n and on SU(2).

Irrep enumeration up to a band limit, quadrature grids for the
normalized Haar measure, forward/inverse matrix Fourier transforms, and
Plancherel/Sobolev norms.

Conventions (pinned; the tests depend on them):

* The Haar measure is normalized: quadrature weights sum to 1, the
  constant function 1 has unit L2 norm, and the mean of a function
  equals its trivial-mode coefficient.
* Torus irreps are the characters exp(i k.x) for k in Z^n with
  |k_i| <= B, with Laplacian eigenvalue |k|^2.
* SU(2) irreps are labelled by half-integer spin l in {0, 1/2, ..., B},
  with dimension 2l+1 and eigenvalue l(l+1).  Group elements are
  parametrized by zyz Euler angles (phi, theta, psi) in
  [0,2pi) x [0,pi] x [0,4pi) (psi runs over the double cover so the
  half-integer spins are single valued), and

      D^l(phi, theta, psi) = E_l(phi) d^l(theta) E_l(psi),
      E_l(alpha) = diag(exp(-i m alpha)),  m = -l, ..., l  (ascending),

  with d^l the real orthogonal matrix returned by :func:`wigner_d`
  (row index m, column index n, both ascending).
* forward computes fhat(xi) = sum_x w(x) f(x) xi(x)^*, inverse
  evaluates f(x) = sum_xi d_xi tr(xi(x) fhat(xi)).

Transforms reduce with numpy's pairwise summation, so identical inputs
reproduce sums bit for bit run to run; parallelism (BLAS) does not
change the reduction order for a fixed thread configuration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import gammaln

__all__ = [
    "GroupSpec",
    "Irrep",
    "IrrepTable",
    "QuadratureGrid",
    "GridField",
    "SpectralField",
    "ResourceLimitError",
    "enumerate_irreps",
    "irrep_table",
    "build_grid",
    "forward",
    "inverse",
    "plancherel_norm_sq",
    "sobolev_norm_sq",
    "wigner_d",
    "random_real_field",
]

#: Largest spin accepted by :func:`wigner_d`.
MAX_SPIN = 128.0

#: Default cap on quadrature points (grids beyond this raise ResourceLimitError).
DEFAULT_MAX_GRID_POINTS = 500_000

#: Cap on synthesis-matrix size (points x matrix entries).
_MAX_DESIGN_ENTRIES = 150_000_000


class ResourceLimitError(RuntimeError):
    """Requested band/oversampling exceeds the configured grid budget."""


@dataclass(frozen=True)
class GroupSpec:
    """Which group to work on, at which band limit.

    kind is 'torus' (dimension n in {1,2,3}) or 'su2'.  ``oversampling``
    scales every grid axis; >= 2 is recommended whenever a pointwise
    nonlinearity is evaluated on the grid.
    """

    kind: str
    bandwidth: int
    n: int = 1
    oversampling: float = 1.0

    def __post_init__(self):
        if self.kind not in ("torus", "su2"):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind == "torus" and self.n not in (1, 2, 3):
            raise ValueError("torus dimension must be 1, 2 or 3")
        if self.kind == "su2":
            object.__setattr__(self, "n", 3)  # one canonical spec per group
        if self.bandwidth < 1:
            raise ValueError("bandwidth must be >= 1")
        if self.oversampling < 1.0:
            raise ValueError("oversampling must be >= 1")

    @classmethod
    def torus(cls, n: int, bandwidth: int, oversampling: float = 1.0) -> "GroupSpec":
        return cls("torus", bandwidth, n=n, oversampling=oversampling)

    @classmethod
    def su2(cls, bandwidth: int, oversampling: float = 1.0) -> "GroupSpec":
        return cls("su2", bandwidth, n=3, oversampling=oversampling)

    @property
    def dim(self) -> int:
        """Topological dimension (n for the torus, 3 for SU(2))."""
        return self.n if self.kind == "torus" else 3


def _unchecked_spec(kind: str, bandwidth: int, n: int = 1, oversampling: float = 1.0) -> GroupSpec:
    # Bypasses the oversampling >= 1 invariant; only for deliberately
    # under-resolved grids in negative tests (CLI allow_undersampled).
    spec = object.__new__(GroupSpec)
    object.__setattr__(spec, "kind", kind)
    object.__setattr__(spec, "bandwidth", bandwidth)
    object.__setattr__(spec, "n", n)
    object.__setattr__(spec, "oversampling", oversampling)
    return spec


@dataclass(frozen=True)
class Irrep:
    """One equivalence class of the unitary dual.

    label is a tuple of ints (torus wave vector) or a float half-integer
    spin (SU(2)); eigenvalue is the Laplacian eigenvalue lambda^2 of the
    matrix entries.
    """

    label: tuple | float
    dim: int
    eigenvalue: float

    @property
    def is_trivial(self) -> bool:
        return self.eigenvalue == 0.0


def enumerate_irreps(spec: GroupSpec) -> list[Irrep]:
    """All irreps up to the band limit, sorted by eigenvalue (trivial first)."""
    B = spec.bandwidth
    if spec.kind == "torus":
        irreps = [
            Irrep(label=k, dim=1, eigenvalue=float(sum(ki * ki for ki in k)))
            for k in itertools.product(range(-B, B + 1), repeat=spec.n)
        ]
        irreps.sort(key=lambda r: (r.eigenvalue, r.label))
    else:
        irreps = [
            Irrep(label=two_l / 2.0, dim=two_l + 1, eigenvalue=(two_l / 2.0) * (two_l / 2.0 + 1.0))
            for two_l in range(0, 2 * B + 1)
        ]
    return irreps


class IrrepTable:
    """Flat layout of all irrep matrix entries for one spec.

    Coefficient matrices are packed row-major per irrep into one complex
    vector; per-entry eigenvalue/dimension arrays drive vectorized mode
    arithmetic.
    """

    def __init__(self, spec: GroupSpec):
        self.spec = spec
        self.irreps = tuple(enumerate_irreps(spec))
        sizes = np.array([r.dim * r.dim for r in self.irreps])
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.n_entries = int(self.offsets[-1])
        self.entry_eigenvalue = np.repeat([r.eigenvalue for r in self.irreps], sizes)
        self.entry_dim = np.repeat([float(r.dim) for r in self.irreps], sizes)
        self._index = {r.label: i for i, r in enumerate(self.irreps)}

    def slot(self, label) -> slice:
        i = self._index[label]
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def irrep(self, label) -> Irrep:
        return self.irreps[self._index[label]]

    @property
    def trivial_index(self) -> int:
        return int(self.offsets[0])  # trivial irrep is sorted first


@lru_cache(maxsize=64)
def irrep_table(spec: GroupSpec) -> IrrepTable:
    return IrrepTable(spec)


@dataclass
class SpectralField:
    """A group Fourier transform: one complex matrix per irrep, packed flat."""

    table: IrrepTable
    coeffs: np.ndarray

    @property
    def spec(self) -> GroupSpec:
        return self.table.spec

    @classmethod
    def zeros(cls, spec: GroupSpec) -> "SpectralField":
        table = irrep_table(spec)
        return cls(table, np.zeros(table.n_entries, dtype=complex))

    @classmethod
    def from_dict(cls, spec: GroupSpec, entries: dict) -> "SpectralField":
        """Build from {label: matrix-or-scalar}; scalars mean c * I_d / d."""
        out = cls.zeros(spec)
        for label, value in entries.items():
            out.set_matrix(label, value)
        return out

    def matrix(self, label) -> np.ndarray:
        """View of the coefficient matrix at the given irrep label."""
        r = self.table.irrep(label)
        return self.coeffs[self.table.slot(label)].reshape(r.dim, r.dim)

    def set_matrix(self, label, value) -> None:
        r = self.table.irrep(label)
        if np.isscalar(value):
            value = (complex(value) / r.dim) * np.eye(r.dim)
        value = np.asarray(value, dtype=complex)
        if value.shape != (r.dim, r.dim):
            raise ValueError(f"matrix for {label!r} must have shape {(r.dim, r.dim)}")
        self.coeffs[self.table.slot(label)] = value.reshape(-1)

    @property
    def mean(self) -> complex:
        """Trivial-mode coefficient (the Haar mean of the function)."""
        return complex(self.coeffs[self.table.trivial_index])

    def copy(self) -> "SpectralField":
        return SpectralField(self.table, self.coeffs.copy())

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.table, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.table, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.table, self.coeffs * scalar)

    __rmul__ = __mul__

    def _check(self, other: "SpectralField") -> None:
        if other.table.spec != self.table.spec:
            raise ValueError("spectral fields built for different specs")


@dataclass(eq=False)
class QuadratureGrid:
    """Quadrature nodes/weights realizing the normalized Haar integral.

    Exact (to roundoff) for products of two band-B matrix coefficients,
    i.e. for single coefficients up to band 2B.
    """

    spec: GroupSpec
    points: np.ndarray      # (P, dim) angles
    weights: np.ndarray     # (P,)
    axes: dict = field(repr=False, default_factory=dict)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def integrate(self, values: np.ndarray) -> complex:
        return complex(np.dot(self.weights, values))

    @cached_property
    def synthesis(self) -> np.ndarray:
        """(P, E) matrix S with f = S @ coeffs; S[i, (m,n)] = d * xi(x_i)[n, m]."""
        table = irrep_table(self.spec)
        if self.n_points * table.n_entries > _MAX_DESIGN_ENTRIES:
            raise ResourceLimitError(
                f"synthesis matrix {self.n_points} x {table.n_entries} exceeds the design budget"
            )
        S = np.empty((self.n_points, table.n_entries), dtype=complex)
        for i, r in enumerate(table.irreps):
            block = representation_matrices(self.spec.kind, r, self.points, self.axes)
            sl = slice(int(table.offsets[i]), int(table.offsets[i + 1]))
            S[:, sl] = r.dim * block.transpose(0, 2, 1).reshape(self.n_points, -1)
        return S

    @cached_property
    def analysis(self) -> np.ndarray:
        """(E, P) matrix F with fhat = F @ f; inverse of synthesis on band-limited data."""
        table = irrep_table(self.spec)
        return (self.synthesis.conj() * self.weights[:, None]).T / table.entry_dim[:, None]


@lru_cache(maxsize=16)
def build_grid(spec: GroupSpec, max_points: int = DEFAULT_MAX_GRID_POINTS) -> QuadratureGrid:
    """Quadrature grid for ``spec`` (cached: repeated calls share matrices).

    Torus: uniform tensor grid, ceil(oversampling*(2B+1)) points per
    dimension, equal weights.  SU(2): uniform in phi and psi
    (ceil(oversampling*(2B+1)) and ceil(oversampling*(4B+2)) points; psi
    covers [0,4pi)), Gauss-Legendre in cos(theta)
    (ceil(oversampling*(B+1)) nodes), weights normalized to sum 1.
    """
    B, os_ = spec.bandwidth, spec.oversampling
    if spec.kind == "torus":
        N = max(1, math.ceil(os_ * (2 * B + 1)))
        if N ** spec.n > max_points:
            raise ResourceLimitError(f"torus grid {N}^{spec.n} exceeds max_points={max_points}")
        axis = 2.0 * np.pi * np.arange(N) / N
        grids = np.meshgrid(*([axis] * spec.n), indexing="ij")
        points = np.stack([g.reshape(-1) for g in grids], axis=1)
        weights = np.full(points.shape[0], 1.0 / N**spec.n)
        axes = {"axis": axis, "n_per_dim": N}
    else:
        n_phi = max(1, math.ceil(os_ * (2 * B + 1)))
        n_theta = max(1, math.ceil(os_ * (B + 1)))
        n_psi = max(1, math.ceil(os_ * (4 * B + 2)))
        if n_phi * n_theta * n_psi > max_points:
            raise ResourceLimitError(
                f"SU(2) grid {n_phi}x{n_theta}x{n_psi} exceeds max_points={max_points}"
            )
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        psi = 4.0 * np.pi * np.arange(n_psi) / n_psi
        z, wz = np.polynomial.legendre.leggauss(n_theta)
        theta = np.arccos(z)
        pp, tt, ss = np.meshgrid(phi, theta, psi, indexing="ij")
        points = np.stack([pp.reshape(-1), tt.reshape(-1), ss.reshape(-1)], axis=1)
        w3 = np.einsum("i,j,k->ijk", np.full(n_phi, 1.0 / n_phi), wz / 2.0, np.full(n_psi, 1.0 / n_psi))
        weights = w3.reshape(-1)
        axes = {"phi": phi, "theta": theta, "psi": psi, "wz": wz}
    return QuadratureGrid(spec=spec, points=points, weights=weights, axes=axes)


@dataclass
class GridField:
    """Function values on a quadrature grid (complex dust from synthesis is tolerated)."""

    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape[0] != self.grid.n_points:
            raise ValueError("values length does not match the grid")


def representation_matrices(kind: str, irrep: Irrep, points: np.ndarray, axes: dict | None = None) -> np.ndarray:
    """xi(x) at every point: complex array of shape (P, d, d)."""
    if kind == "torus":
        phases = points @ np.asarray(irrep.label, dtype=float)
        return np.exp(1j * phases)[:, None, None]
    ell = float(irrep.label)
    two_l = int(round(2 * ell))
    m = np.arange(-two_l, two_l + 1, 2) / 2.0
    phi, theta, psi = points[:, 0], points[:, 1], points[:, 2]
    if axes is not None and "theta" in axes:
        # tensor grid: evaluate d^l once per theta node, then index
        theta_axis = axes["theta"]
        fam = _wigner_family(two_l, theta_axis)[two_l]
        idx = np.searchsorted(-theta_axis, -theta)  # theta descending with GL z ascending
        d_block = fam[idx]
    else:
        d_block = _wigner_family(two_l, theta)[two_l]
    e_phi = np.exp(-1j * np.outer(phi, m))
    e_psi = np.exp(-1j * np.outer(psi, m))
    return e_phi[:, :, None] * d_block * e_psi[:, None, :]


def forward(f: GridField) -> SpectralField:
    """Group Fourier transform: fhat(xi) = sum_x w(x) f(x) xi(x)^*.

    Coefficients above the grid's band limit are discarded (hard
    Galerkin truncation).
    """
    table = irrep_table(f.grid.spec)
    return SpectralField(table, f.grid.analysis @ np.asarray(f.values, dtype=complex))


def inverse(F: SpectralField, grid: QuadratureGrid) -> GridField:
    """Fourier series f(x) = sum_xi d_xi tr(xi(x) fhat(xi)) on the grid points."""
    if F.spec != grid.spec:
        raise ValueError("spectral field and grid were built for different specs")
    return GridField(grid, grid.synthesis @ F.coeffs)


def plancherel_norm_sq(F: SpectralField) -> float:
    """Squared L2 norm, sum_xi d_xi ||fhat(xi)||_HS^2."""
    return float(np.sum(F.table.entry_dim * np.abs(F.coeffs) ** 2))


def sobolev_norm_sq(F: SpectralField, s: float) -> tuple[float, float]:
    """Pair (homogeneous part, full norm) of the order-s Sobolev norm.

    The first element is sum_xi d_xi lambda^(2s) ||fhat||_HS^2 (squared);
    the second is the unsquared full norm ||f||_L2 + ||(-L)^{s/2} f||_L2.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    lam2 = F.table.entry_eigenvalue
    weights = np.ones_like(lam2) if s == 0 else lam2**s
    hom_sq = float(np.sum(F.table.entry_dim * weights * np.abs(F.coeffs) ** 2))
    full = math.sqrt(plancherel_norm_sq(F)) + math.sqrt(hom_sq)
    return hom_sq, full


# ---------------------------------------------------------------------------
# Wigner d matrices


def wigner_d(ell: float, theta: float) -> np.ndarray:
    """Real orthogonal Wigner matrix d^l(theta), shape (2l+1, 2l+1).

    Row index m and column index n run ascending from -l to l;
    d^l(theta) = exp(+i theta Jy) in that basis, so
    d^(1/2) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]].
    Seeds use binomial closed forms at l0 = max(|m|, |n|); higher l by
    the three-term recursion in l (stable far beyond the factorial
    formulas, checked orthogonal to 1e-10 at l = 64).
    """
    two_l = int(round(2 * ell))
    if abs(2 * ell - two_l) > 1e-12 or ell < 0:
        raise ValueError("ell must be a nonnegative half-integer")
    if ell > MAX_SPIN:
        raise ValueError(f"ell={ell} exceeds the supported band ({MAX_SPIN})")
    return _wigner_family(two_l, np.array([float(theta)]))[two_l][0]


def _wigner_family(two_b: int, thetas: np.ndarray) -> dict[int, np.ndarray]:
    """d^l(theta) for every l with 2l <= two_b; arrays of shape (T, d, d)."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    T = thetas.shape[0]
    x = np.cos(thetas)
    c2 = np.cos(thetas / 2.0)
    s2 = np.sin(thetas / 2.0)
    out = {two_l: np.zeros((T, two_l + 1, two_l + 1)) for two_l in range(0, two_b + 1)}
    for parity in (0, 1):
        if parity > two_b:
            continue
        two_vals = np.arange(-(two_b - (two_b - parity) % 2), two_b + 1, 2)
        mm, nn = np.meshgrid(two_vals, two_vals, indexing="ij")
        m = mm.reshape(-1) / 2.0
        n = nn.reshape(-1) / 2.0
        two_l0 = np.maximum(np.abs(mm), np.abs(nn)).reshape(-1)
        d_prev = np.zeros((m.size, T))
        d_cur = np.zeros((m.size, T))
        for two_l in range(parity, two_b + 1, 2):
            fresh = two_l0 == two_l
            if np.any(fresh):
                d_cur[fresh] = _wigner_seed(m[fresh], n[fresh], two_l / 2.0, c2, s2)
                d_prev[fresh] = 0.0
            active = two_l0 <= two_l
            if np.any(active):
                block = out[two_l]
                rows = ((mm.reshape(-1)[active] + two_l) // 2).astype(int)
                cols = ((nn.reshape(-1)[active] + two_l) // 2).astype(int)
                block[:, rows, cols] = d_cur[active].T
            if two_l + 2 <= two_b:
                ell = two_l / 2.0
                if ell > 0:
                    b_l = m * n / (ell * (ell + 1.0))
                    g_l = np.sqrt(np.maximum(ell**2 - m**2, 0.0) * np.maximum(ell**2 - n**2, 0.0)) / (
                        ell * (2.0 * ell + 1.0)
                    )
                else:
                    b_l = np.zeros_like(m)
                    g_l = np.zeros_like(m)
                a_next = np.sqrt(np.maximum((ell + 1.0) ** 2 - m**2, 0.0) * np.maximum((ell + 1.0) ** 2 - n**2, 0.0)) / (
                    (ell + 1.0) * (2.0 * ell + 1.0)
                )
                safe_a = np.where(active, a_next, 1.0)
                d_next = ((x[None, :] - b_l[:, None]) * d_cur - g_l[:, None] * d_prev) / safe_a[:, None]
                d_next[~active] = 0.0
                d_prev, d_cur = d_cur, d_next
    return out


def _wigner_seed(m: np.ndarray, n: np.ndarray, ell: float, c2: np.ndarray, s2: np.ndarray) -> np.ndarray:
    """d^l_{mn}(theta) at l = max(|m|, |n|), vectorized over (m, n) rows and theta."""
    out = np.empty((m.size, c2.size))
    col_dominant = np.abs(n) >= np.abs(m)
    # one closed form per edge of the matrix: (rows, free index, signed?, flipped powers?)
    cases = (
        (col_dominant & (n >= 0), m, True, False),   # n = +l: (-1)^(l-m) C cos^(l+m) sin^(l-m)
        (col_dominant & (n < 0), m, False, True),    # n = -l: C cos^(l-m) sin^(l+m)
        (~col_dominant & (m > 0), n, False, False),  # m = +l: C cos^(l+n) sin^(l-n)
        (~col_dominant & (m < 0), n, True, True),    # m = -l: (-1)^(l+n) C cos^(l-n) sin^(l+n)
    )
    for rows, free, signed, flipped in cases:
        if not np.any(rows):
            continue
        k = free[rows]
        coef = np.exp(0.5 * (gammaln(2 * ell + 1) - gammaln(ell + k + 1) - gammaln(ell - k + 1)))
        pc = np.rint(ell - k if flipped else ell + k).astype(int)
        ps = np.rint(ell + k if flipped else ell - k).astype(int)
        if signed:
            coef = coef * (-1.0) ** np.rint(ell + k if flipped else ell - k)
        out[rows] = coef[:, None] * c2[None, :] ** pc[:, None] * s2[None, :] ** ps[:, None]
    return out


def random_real_field(spec: GroupSpec, rng: np.random.Generator, scale: float = 1.0) -> SpectralField:
    """Seeded random band-limited real-valued field (returned spectrally).

    Draws complex Gaussian coefficients, synthesizes on the grid, takes
    the real part, and re-transforms; the real part of a band-limited
    function is band-limited, so this is exact up to quadrature roundoff.
    """
    table = irrep_table(spec)
    raw = rng.standard_normal(table.n_entries) + 1j * rng.standard_normal(table.n_entries)
    grid = build_grid(spec)
    f = grid.synthesis @ (scale * raw / np.sqrt(table.n_entries))
    return forward(GridField(grid, f.real.astype(complex)))
