"""Physical parameters and spatial correlation functions.

The disorder is a mean-zero Gaussian potential, uncorrelated in time and
correlated in space through an even correlation function ``g``.  Everything
downstream (closed-form kernels, deterministic evolution, Monte Carlo)
consumes the two objects defined here: :class:`ModelParams` and a
correlation object (:class:`GaussianCorrelation` or
:class:`TabulatedCorrelation`).

The admissibility conditions on ``g`` are checked numerically by
:func:`validate_hypotheses`: evenness, vanishing gradient at the origin,
negative-definite Hessian at the origin, and a nonnegative sampled spectrum
(so the field can actually be realised as a stationary Gaussian process).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InputError

__all__ = [
    "Space",
    "ModelParams",
    "GaussianCorrelation",
    "TabulatedCorrelation",
    "LatticeCorrelationData",
    "HypothesisReport",
    "validate_hypotheses",
    "laplacian_g_at_zero",
    "load_correlation_csv",
]


class Space(Enum):
    CONTINUUM = "continuum"
    LATTICE = "lattice"


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the model.

    hbar, mass > 0; v0 >= 0 is the disorder strength (v0 = 0 exercises the
    ballistic limit); dim >= 1; space selects continuum or lattice kinetics.
    """

    hbar: float = 1.0
    mass: float = 1.0
    v0: float = 1.0
    dim: int = 1
    space: Space = Space.CONTINUUM

    def __post_init__(self):
        if not (self.hbar > 0):
            raise InputError(f"hbar must be positive, got {self.hbar}")
        if not (self.mass > 0):
            raise InputError(f"mass must be positive, got {self.mass}")
        if not (self.v0 >= 0):
            raise InputError(f"v0 must be nonnegative, got {self.v0}")
        if not (isinstance(self.dim, int) and self.dim >= 1):
            raise InputError(f"dim must be a positive integer, got {self.dim}")
        if not isinstance(self.space, Space):
            raise InputError(f"space must be a Space enum, got {self.space!r}")

    @property
    def coupling(self) -> float:
        """(v0 / hbar)**2, the rate scale of disorder-induced decay."""
        return (self.v0 / self.hbar) ** 2


class GaussianCorrelation:
    """g(x) = exp(-x^T A x) for a symmetric positive-definite matrix A.

    Gradient and Hessian are analytic.  The Fourier transform is a Gaussian,
    hence positive, so this family always defines a valid correlation.
    """

    kind = "gaussian-quadratic"

    def __init__(self, matrix):
        A = np.atleast_2d(np.asarray(matrix, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InputError(f"correlation matrix must be square, got shape {A.shape}")
        if not np.allclose(A, A.T, atol=1e-12):
            raise InputError("correlation matrix must be symmetric")
        eigvals = np.linalg.eigvalsh(A)
        if eigvals.min() <= 0:
            raise InputError(f"correlation matrix must be positive definite, eigenvalues {eigvals}")
        self.matrix = A
        self.dim = A.shape[0]
        self._eigvals = eigvals

    def _as_points(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]  # scalars / flat batches in one dimension
        return x

    def g(self, x):
        x = self._as_points(x)
        quad = np.einsum("...i,ij,...j->...", x, self.matrix, x)
        return np.exp(-quad)

    def grad(self, x):
        x = self._as_points(x)
        ax = x @ self.matrix.T
        return -2.0 * ax * self.g(x)[..., None]

    def hess(self, x):
        x = self._as_points(x)
        ax = x @ self.matrix.T
        outer = ax[..., :, None] * ax[..., None, :]
        return (-2.0 * self.matrix + 4.0 * outer) * self.g(x)[..., None, None]

    def correlation_length(self) -> float:
        return 1.0 / np.sqrt(self._eigvals.min())

    def table_extent(self) -> float:
        # distance at which g has decayed to ~1e-14
        return 6.0 * self.correlation_length()


class TabulatedCorrelation:
    """Correlation given by samples on a uniform 1-d grid, used radially.

    The table is symmetrised (g <- (g(x) + g(-x)) / 2) before interpolation;
    the largest change this makes is recorded in ``symmetrization_delta``.
    Evaluation uses a cubic spline in ``r = |x|`` with an even extension, so
    g(-x) = g(x) holds exactly.  Gradient and Hessian come from central
    finite differences on the interpolant.
    """

    kind = "tabulated"

    def __init__(self, x, values, dim=1, fd_step=None):
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != values.shape or x.size < 4:
            raise InputError("tabulated correlation needs matching 1-d arrays with >= 4 samples")
        order = np.argsort(x)
        x, values = x[order], values[order]
        dx = np.diff(x)
        if not np.allclose(dx, dx[0], rtol=1e-8, atol=1e-12):
            raise InputError("tabulated correlation requires a uniform grid")

        # even symmetrisation on the sampled values
        sym = 0.5 * (values + np.interp(-x, x, values, left=np.nan, right=np.nan))
        inside = ~np.isnan(sym)
        self.symmetrization_delta = float(np.max(np.abs(sym[inside] - values[inside]), initial=0.0))
        values = np.where(inside, sym, values)

        # fit over the full symmetric domain (a half-grid spline would put a
        # boundary right at the origin and kink the radial evaluation);
        # evaluation then uses |x|, which makes evenness exact
        from scipy.interpolate import CubicSpline

        self._spline = CubicSpline(x, values, bc_type="natural")
        pos = x >= 0
        self._r = x[pos]
        self._v = values[pos]
        self.dim = int(dim)
        self._rmax = float(min(x[-1], -x[0]))
        self._fd_step = fd_step if fd_step is not None else max(1e-4, float(dx[0]) / 8.0)

    def _radial(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r > self._rmax * (1 + 1e-12)):
            raise InputError(
                f"tabulated correlation evaluated at r={float(np.max(r)):.6g} "
                f"outside table range [0, {self._rmax:.6g}]"
            )
        return self._spline(np.minimum(r, self._rmax))

    def g(self, x):
        x = np.asarray(x, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1)) if x.ndim and x.shape[-1] == self.dim else np.abs(x)
        return self._radial(r)

    def grad(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        h = self._fd_step
        out = np.empty_like(x, dtype=float)
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = h
            out[..., j] = (self.g(x + e) - self.g(x - e)) / (2 * h)
        return out

    def hess(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        h = self._fd_step
        d = self.dim
        out = np.empty(x.shape[:-1] + (d, d)) if x.shape[-1:] == (d,) else np.empty((d, d))
        g0 = self.g(x)
        for i in range(d):
            ei = np.zeros(d)
            ei[i] = h
            out[..., i, i] = (self.g(x + ei) - 2 * g0 + self.g(x - ei)) / h**2
            for j in range(i + 1, d):
                ej = np.zeros(d)
                ej[j] = h
                mixed = (
                    self.g(x + ei + ej) - self.g(x + ei - ej) - self.g(x - ei + ej) + self.g(x - ei - ej)
                ) / (4 * h**2)
                out[..., i, j] = mixed
                out[..., j, i] = mixed
        return out

    def correlation_length(self) -> float:
        # scale over which the table drops by 1/e, fallback to table extent
        v0 = self._radial(0.0)
        below = np.nonzero(self._v <= v0 / np.e)[0]
        return float(self._r[below[0]]) if below.size else float(self._rmax)

    def table_extent(self) -> float:
        return float(self._rmax)


def load_correlation_csv(path, dim=1) -> TabulatedCorrelation:
    """Load a two-column (x, g) CSV into a tabulated correlation."""
    xs, vs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
            except (ValueError, IndexError) as exc:
                raise InputError(f"{path}: malformed correlation row {row!r}") from exc
    if len(xs) < 4:
        raise InputError(f"{path}: need at least 4 samples, got {len(xs)}")
    return TabulatedCorrelation(xs, vs, dim=dim)


@dataclass(frozen=True)
class LatticeCorrelationData:
    """Correlation values the lattice moment algebra needs.

    gamma[m] = (v0/hbar)^2 [g(0) - g(e_m)] is the dephasing rate of the
    m-th axis; gamma2[m] is the same quantity at 2 e_m (it enters the
    second-derivative recursion).  Axes with gamma[m] = 0 are ballistic
    channels and are listed in ``ballistic_channels``.
    """

    g0: float
    g_nn: np.ndarray
    gamma: np.ndarray
    gamma2: np.ndarray = None
    ballistic_channels: tuple = field(default=())

    @classmethod
    def from_correlation(cls, corr, params: ModelParams, zero_tol=1e-13):
        d = params.dim
        eye = np.eye(d)
        g0 = float(corr.g(np.zeros(d)))
        g_nn = np.array([float(corr.g(eye[m])) for m in range(d)])
        g_2nn = np.array([float(corr.g(2 * eye[m])) for m in range(d)])
        gamma = params.coupling * (g0 - g_nn)
        gamma2 = params.coupling * (g0 - g_2nn)
        if np.any(gamma < -zero_tol * max(abs(g0), 1.0)):
            raise InputError("g(0) < g(e_m): correlation increases away from the origin")
        gamma = np.maximum(gamma, 0.0)
        gamma2 = np.maximum(gamma2, 0.0)
        flat = tuple(int(m) for m in range(d) if gamma[m] <= zero_tol * max(params.coupling * abs(g0), 1e-300))
        return cls(g0=g0, g_nn=g_nn, gamma=gamma, gamma2=gamma2, ballistic_channels=flat)


@dataclass(frozen=True)
class HypothesisReport:
    """Per-hypothesis pass/fail with diagnostics."""

    even: bool
    gradient_at_zero: bool
    hessian_negative_definite: bool
    spectrum_nonnegative: bool
    diagnostics: dict

    @property
    def passed(self) -> bool:
        return self.even and self.gradient_at_zero and self.hessian_negative_definite and self.spectrum_nonnegative

    def summary(self) -> str:
        rows = [
            ("evenness g(x) = g(-x)", self.even, f"max asymmetry {self.diagnostics['max_asymmetry']:.3e}"),
            ("gradient vanishes at 0", self.gradient_at_zero, f"|grad g(0)| = {self.diagnostics['grad_norm']:.3e}"),
            (
                "Hessian at 0 negative definite",
                self.hessian_negative_definite,
                f"eigenvalues {np.array2string(self.diagnostics['hessian_eigenvalues'], precision=6)}",
            ),
            (
                "sampled spectrum nonnegative",
                self.spectrum_nonnegative,
                f"min(spectrum)/max(spectrum) = {self.diagnostics['spectrum_min_ratio']:.3e}",
            ),
        ]
        lines = [f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}" for name, ok, detail in rows]
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _spectrum_grid(corr, params: ModelParams):
    d = params.dim
    if params.space is Space.LATTICE:
        n = 64
        spacing = 1.0
    else:
        n = {1: 512, 2: 128}.get(d, 32)
        extent = corr.table_extent()
        # keep grid corners inside the evaluable radius of tabulated g
        spacing = 2.0 * extent / (n * np.sqrt(d))
    axes = np.indices((n,) * d).reshape(d, -1).T
    coords = ((axes + n // 2) % n - n // 2) * spacing  # minimum image around 0
    return coords.reshape((n,) * d + (d,)), (n,) * d


def validate_hypotheses(corr, params: ModelParams, n_probe=64, seed=20240117) -> HypothesisReport:
    """Numerically check the admissibility of a correlation function.

    Checks, in order: evenness on a random probe set around the origin,
    vanishing gradient at 0, negative-definite Hessian at 0, and
    nonnegativity of the correlation's sampled Fourier transform on the
    grid that would be used for field sampling.  Deterministic: the probe
    set is drawn from a fixed seed.
    """
    d = params.dim
    if getattr(corr, "dim", d) != d:
        raise InputError(f"correlation has dim {corr.dim}, model has dim {d}")
    rng = np.random.default_rng(seed)
    scale = min(corr.correlation_length(), corr.table_extent() / 2.0)
    probes = rng.uniform(-scale, scale, size=(n_probe, d))

    g_plus = np.asarray(corr.g(probes), dtype=float)
    g_minus = np.asarray(corr.g(-probes), dtype=float)
    max_asym = float(np.max(np.abs(g_plus - g_minus)))
    g0 = float(corr.g(np.zeros(d)))
    even_ok = max_asym <= 1e-10 * max(abs(g0), 1.0)

    grad0 = np.asarray(corr.grad(np.zeros(d)), dtype=float).reshape(d)
    grad_norm = float(np.linalg.norm(grad0))
    grad_ok = grad_norm <= 1e-10

    hess0 = np.asarray(corr.hess(np.zeros(d)), dtype=float).reshape(d, d)
    eigvals = np.linalg.eigvalsh(0.5 * (hess0 + hess0.T))
    hess_ok = bool(np.all(eigvals < -1e-12))

    coords, shape = _spectrum_grid(corr, params)
    samples = np.asarray(corr.g(coords), dtype=float).reshape(shape)
    spectrum = np.fft.fftn(samples).real
    smax = float(spectrum.max())
    smin = float(spectrum.min())
    ratio = smin / smax if smax > 0 else smin
    spectrum_ok = smin >= -1e-8 * max(smax, 1.0)

    return HypothesisReport(
        even=even_ok,
        gradient_at_zero=grad_ok,
        hessian_negative_definite=hess_ok,
        spectrum_nonnegative=spectrum_ok,
        diagnostics={
            "max_asymmetry": max_asym,
            "grad_norm": grad_norm,
            "hessian_eigenvalues": eigvals,
            "spectrum_min": smin,
            "spectrum_max": smax,
            "spectrum_min_ratio": ratio,
            "probe_scale": scale,
        },
    )


def laplacian_g_at_zero(corr) -> float:
    """Trace of the Hessian of g at the origin (negative for admissible g)."""
    d = corr.dim
    hess0 = np.asarray(corr.hess(np.zeros(d)), dtype=float).reshape(d, d)
    return float(np.trace(hess0))
