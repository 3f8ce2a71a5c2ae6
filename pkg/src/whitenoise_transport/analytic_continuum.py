"""Closed-form disorder-averaged kernel and moments on the continuum.

Change variables to X = x + x', Y = x - x' and Fourier transform the
averaged density kernel in X with the convention

    K(k, Y, t) = integral exp(i k . X) <rho(x', x, t)> dX.

The averaged evolution is then a first-order transport equation in Y whose
characteristics are straight lines, giving the exact solution

    K(k, Y, t) = K(k, Y - (2 hbar t / m) k, 0) * exp(phase(k, t; k0=Y))

with the nonpositive phase

    phase(k, t) = -(v0/hbar)^2 [ g(0) t - integral_0^t g(k0 - (2 hbar s/m) k) ds ].

Moments of position follow from k-derivatives at k = 0:

    <|x|^2>(t) = -(1/2**(d+2)) Laplacian_k K(k, 0, t) | k=0.

Note K(0, 0, 0) = 2**d * Tr(rho_0) under this convention (X = 2x on the
diagonal); every 2**d factor in this module follows from that bookkeeping,
see docs/conventions.md.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad

from .core_model import ModelParams, laplacian_g_at_zero
from .errors import InputError, NumericalError

__all__ = [
    "PhaseQuery",
    "GaussianPureState",
    "TabulatedInitialKernel",
    "Provenance",
    "MomentSeries",
    "phase",
    "kernel_hat",
    "msd_closed_form",
    "msd_by_kernel_differences",
    "cubic_coefficient",
    "laplace_kernel_1d",
]


class Provenance(Enum):
    CLOSED_FORM = "closed-form"
    FINITE_DIFFERENCE_OF_KERNEL = "finite-difference-of-kernel"
    MONTE_CARLO = "monte-carlo"
    DETERMINISTIC_EVOLUTION = "deterministic-evolution"


@dataclass(frozen=True)
class PhaseQuery:
    """Evaluation point of the phase: Fourier variable k, characteristic
    offset k0 (defaults to 0) and nonnegative time t."""

    k: np.ndarray
    t: float
    k0: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "k", np.atleast_1d(np.asarray(self.k, dtype=float)))
        k0 = np.zeros_like(self.k) if self.k0 is None else np.atleast_1d(np.asarray(self.k0, dtype=float))
        object.__setattr__(self, "k0", k0)
        if self.k0.shape != self.k.shape:
            raise InputError(f"k and k0 must have the same shape, got {self.k.shape} vs {self.k0.shape}")
        if self.t < 0:
            raise InputError(f"t must be nonnegative, got {self.t}")


@dataclass(frozen=True)
class MomentSeries:
    """Mean-square displacement (and optionally kinetic energy) vs time."""

    times: np.ndarray
    msd: np.ndarray
    energy: np.ndarray = None
    provenance: Provenance = Provenance.CLOSED_FORM

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        m = np.asarray(self.msd, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "msd", m)
        if t.shape != m.shape:
            raise InputError("times and msd must have matching shapes")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise InputError("times must be strictly increasing")
        if m.size and np.min(m) < -1e-12 * max(float(np.max(np.abs(m))), 1.0):
            raise InputError("msd must be nonnegative")
        if self.energy is not None:
            e = np.asarray(self.energy, dtype=float)
            if e.shape != t.shape:
                raise InputError("energy must match times")
            object.__setattr__(self, "energy", e)

    def to_csv(self, path_or_buf):
        """CSV ``t,msd[,energy]`` with 17-significant-digit decimals, LF."""
        own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
        fh = open(path_or_buf, "w", newline="\n") if own else path_or_buf
        try:
            cols = ["t", "msd"] + (["energy"] if self.energy is not None else [])
            fh.write(",".join(cols) + "\n")
            for i in range(self.times.size):
                row = [f"{self.times[i]:.17g}", f"{self.msd[i]:.17g}"]
                if self.energy is not None:
                    row.append(f"{self.energy[i]:.17g}")
                fh.write(",".join(row) + "\n")
        finally:
            if own:
                fh.close()

    @classmethod
    def from_csv(cls, path_or_buf, provenance=Provenance.CLOSED_FORM):
        own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
        fh = open(path_or_buf, newline="") if own else path_or_buf
        try:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader if row]
        finally:
            if own:
                fh.close()
        data = np.asarray(rows, dtype=float)
        energy = data[:, 2] if len(header) > 2 else None
        return cls(times=data[:, 0], msd=data[:, 1], energy=energy, provenance=provenance)


class GaussianPureState:
    """Product Gaussian wavepacket, one width per axis, zero momentum.

    psi(x) ~ prod_j exp(-x_j^2 / (4 sigma_j^2)); the initial kernel in the
    module's transform convention is

        K(k, Y, 0) = trace * 2**d * prod_j exp(-Y_j^2/(8 sigma_j^2) - 2 sigma_j^2 k_j^2).
    """

    def __init__(self, sigma, dim=None, trace=1.0):
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        if dim is not None and sigma.size == 1:
            sigma = np.full(dim, sigma[0])
        if np.any(sigma <= 0):
            raise InputError(f"sigma must be positive, got {sigma}")
        if not trace > 0:
            raise InputError(f"trace must be positive, got {trace}")
        self.sigma = sigma
        self.dim = sigma.size
        self.trace = float(trace)

    def kernel_at(self, k, Y) -> complex:
        k = np.atleast_1d(np.asarray(k, dtype=float))
        Y = np.atleast_1d(np.asarray(Y, dtype=float))
        expo = -np.sum(Y**2 / (8 * self.sigma**2) + 2 * self.sigma**2 * k**2)
        return self.trace * (2.0**self.dim) * np.exp(expo)

    def second_moment(self) -> float:
        """Initial <|x|^2> = sum_j sigma_j^2 (times the trace)."""
        return float(self.trace * np.sum(self.sigma**2))

    def free_msd(self, t, params: ModelParams):
        """Free-spreading law sum_j [sigma_j^2 + (hbar t / (2 m sigma_j))^2]."""
        t = np.asarray(t, dtype=float)
        c = (params.hbar / (2 * params.mass * self.sigma)) ** 2
        return self.trace * (np.sum(self.sigma**2) + np.sum(c) * t**2)


class TabulatedInitialKernel:
    """Initial kernel given by an arbitrary sampler K(k, Y, 0).

    The sampler must decay in Y (the characteristic solution pulls the
    kernel along Y = -(2 hbar t / m) k); out-of-range samplers should
    return 0 beyond their tabulated region.
    """

    def __init__(self, sampler, dim, trace=1.0, second_moment_value=None):
        self._sampler = sampler
        self.dim = dim
        self.trace = float(trace)
        self._second_moment = second_moment_value

    def kernel_at(self, k, Y) -> complex:
        return complex(self._sampler(np.atleast_1d(k), np.atleast_1d(Y)))

    def second_moment(self) -> float:
        if self._second_moment is None:
            raise InputError("tabulated initial kernel has no declared finite second moment")
        return float(self._second_moment)


def phase(query: PhaseQuery, corr, params: ModelParams, quad_tol=1e-10) -> float:
    """Nonpositive phase controlling decay of the averaged kernel.

    phase(k, t) = -(v0/hbar)^2 [g(0) t - integral_0^t g(k0 - (2 hbar s/m) k) ds],
    with the line integral done by adaptive quadrature (abs tol ``quad_tol``).
    phase(0, t) = 0 when k0 = 0, and phase <= 0 always (g peaks at 0).
    """
    if params.v0 == 0.0 or query.t == 0.0:
        return 0.0
    c = 2.0 * params.hbar / params.mass
    k, k0, t = query.k, query.k0, query.t
    g0 = float(corr.g(np.zeros_like(k)))

    if np.all(k == 0.0) and np.all(k0 == 0.0):
        return 0.0

    def integrand(s):
        return float(corr.g(k0 - (c * s) * k))

    val, err = quad(integrand, 0.0, t, epsabs=quad_tol, epsrel=1e-12, limit=400)
    if err > max(quad_tol * 10, 1e-8 * abs(val)):
        raise NumericalError(f"phase quadrature reached only abs error {err:.3e}", achieved=err)
    return -params.coupling * (g0 * t - val)


def kernel_hat(k, Y0, t, init, corr, params: ModelParams) -> complex:
    """Averaged kernel K(k, Y0, t) via the characteristic solution."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    Y0 = np.atleast_1d(np.asarray(Y0, dtype=float))
    shift = Y0 - (2.0 * params.hbar * t / params.mass) * k
    ph = phase(PhaseQuery(k=k, t=t, k0=Y0), corr, params)
    return init.kernel_at(k, shift) * np.exp(ph)


def _laplacian_k(func, dim, base_step):
    """Richardson-extrapolated central second differences summed over axes.

    Steps base, base/2, base/4 per axis; two extrapolation levels give an
    O(h^6) estimate of sum_j d^2 f / dk_j^2 at k = 0.
    """
    total = 0.0 + 0.0j
    f0 = func(np.zeros(dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = 1.0
        d_vals = []
        for h in (base_step, base_step / 2, base_step / 4):
            d_vals.append((func(h * e) - 2.0 * f0 + func(-h * e)) / h**2)
        r1a = (4.0 * d_vals[1] - d_vals[0]) / 3.0
        r1b = (4.0 * d_vals[2] - d_vals[1]) / 3.0
        total += (16.0 * r1b - r1a) / 15.0
    return total


def _fd_base_step(params: ModelParams, t: float, t_max: float) -> float:
    # keeps the characteristic shift (2 hbar t/m) k below 1e-2 at every
    # time; the floor at t_max/50 stops roundoff from dominating the
    # second differences at small t
    t_eff = max(t, 0.02 * t_max, 1e-12)
    return 1e-2 * params.mass / (2.0 * params.hbar * t_eff)


def cubic_coefficient(init, corr, params: ModelParams) -> float:
    """Coefficient of t^3 in the closed-form mean-square displacement.

    Exact for zero-momentum initial states: the phase Hessian at k = 0 is
    (v0/hbar)^2 (2 hbar/m)^2 Hess g(0) t^3/3, so the cubic term is
    -(1/(3 * 2**(d+2))) (2 v0/m)^2 (Lap g)(0) K(0,0,0).
    """
    d = params.dim
    lap_g = laplacian_g_at_zero(corr)
    k000 = init.kernel_at(np.zeros(d), np.zeros(d)).real
    return -(1.0 / (3.0 * 2.0 ** (d + 2))) * (2.0 * params.v0 / params.mass) ** 2 * lap_g * k000


def msd_closed_form(times, init, corr, params: ModelParams, fd_base_step=None) -> MomentSeries:
    """Mean-square displacement from the closed-form kernel.

    The phase part of the k-Laplacian is analytic (exactly cubic in t for
    k0 = 0); the initial-kernel factor is differentiated numerically with
    Richardson-extrapolated central differences.  The two contributions add
    because grad_k phase(0, t) = 0 (evenness of g).
    """
    times = np.asarray(times, dtype=float)
    if hasattr(init, "second_moment"):
        init.second_moment()  # raises InputError when not finite/declared
    d = params.dim
    norm = 1.0 / 2.0 ** (d + 2)
    k000 = init.kernel_at(np.zeros(d), np.zeros(d)).real
    lap_g = laplacian_g_at_zero(corr)
    phase_hess_rate = params.coupling * (2.0 * params.hbar / params.mass) ** 2 * lap_g / 3.0
    t_max = float(times.max())

    c = 2.0 * params.hbar / params.mass
    msd = np.empty_like(times)
    for i, t in enumerate(times):
        base = fd_base_step if fd_base_step is not None else _fd_base_step(params, t, t_max)
        lap_w = _laplacian_k(lambda k: init.kernel_at(k, -(c * t) * k), d, base).real
        msd[i] = -norm * (phase_hess_rate * t**3 * k000 + lap_w)
    return MomentSeries(times=times, msd=msd, provenance=Provenance.CLOSED_FORM)


def msd_by_kernel_differences(times, init, corr, params: ModelParams, fd_base_step=None) -> MomentSeries:
    """Mean-square displacement by pure finite differences of kernel_hat.

    Independent of the analytic phase differentiation in
    :func:`msd_closed_form`; used as a consistency oracle.
    """
    times = np.asarray(times, dtype=float)
    d = params.dim
    norm = 1.0 / 2.0 ** (d + 2)
    t_max = float(times.max())
    msd = np.empty_like(times)
    for i, t in enumerate(times):
        base = fd_base_step if fd_base_step is not None else _fd_base_step(params, t, t_max)
        lap = _laplacian_k(lambda k: kernel_hat(k, np.zeros(d), t, init, corr, params), d, base).real
        msd[i] = -norm * lap
    return MomentSeries(times=times, msd=msd, provenance=Provenance.FINITE_DIFFERENCE_OF_KERNEL)


def laplace_kernel_1d(k, s, init, corr, params: ModelParams, quad_tol=1e-10) -> complex:
    """Laplace transform (in t) of kernel_hat(k, 0, .) in one dimension.

    Evaluates the integral representation
    integral_0^inf exp(-s z + phase(k, z)) K(k, -2 hbar k z/m, 0) dz
    by adaptive quadrature; requires Re s > 0.
    """
    if params.dim != 1:
        raise InputError("laplace_kernel_1d is the one-dimensional special case")
    s = complex(s)
    if s.real <= 0:
        raise InputError(f"need Re s > 0, got {s}")
    k = float(np.atleast_1d(k)[0])
    c = 2.0 * params.hbar / params.mass

    def f(z):
        ph = phase(PhaseQuery(k=np.array([k]), t=z), corr, params, quad_tol=quad_tol)
        return np.exp(-s * z + ph) * init.kernel_at(np.array([k]), np.array([-c * k * z]))

    upper = min(60.0 / s.real, np.inf)
    re, re_err = quad(lambda z: f(z).real, 0.0, upper, epsabs=quad_tol, epsrel=1e-11, limit=400)
    im, im_err = quad(lambda z: f(z).imag, 0.0, upper, epsabs=quad_tol, epsrel=1e-11, limit=400)
    if re_err + im_err > 1e-7 * max(abs(re + 1j * im), quad_tol):
        raise NumericalError(f"Laplace-kernel quadrature error {re_err + im_err:.3e}",
                             achieved=re_err + im_err)
    return re + 1j * im
