"""Laplace-domain moment algebra on the lattice.

The transformed averaged kernel obeys, axis by axis, a closed recursion at
k = 0 in which each k-derivative couples to nearest Y-shifts of the one
below.  Writing h(Y, s) = s + gamma(Y) with the dephasing rate
gamma(Y) = (v0/hbar)^2 [g(0) - g(Y)] (h(0, s) = s exactly), the chain

    h(Y, s) M0 = K(0, Y, 0)
    h(Y, s) M1_m = c1 [M0(Y + e_m) - M0(Y - e_m)] + d_m K(0, Y, 0)
    s       M2_m(0) = 2 c1 [M1_m(e_m) - M1_m(-e_m)] + d_m^2 K(0, 0, 0)

closes after two steps (c1 = hbar/m).  The Laplace transform of the
second-moment sum is then explicit: a (2 hbar/m)^2 / (s^2 h(e_m, s))
leading term plus O(1/s) remainders built from initial-kernel probes on
the stencil {0, +-e_m, +-2e_m}.

For Hermitian initial kernels every assembled quantity is manifestly real
at real s.  The small-s pole structure 1/(s^2 (s + Gamma_m)) inverts in
closed form; its long-time slope defines the diffusion constant, and a
vanishing Gamma_m short-circuits to the ballistic branch.

Normalization caveat: these expressions are the raw k-Laplacian of the
transformed kernel.  The physical mean-square displacement on the lattice
is -(1/4) of it (diagonal sites have X = 2x and the sum has no volume
Jacobian); the deterministic evolution route measures that constant, see
docs/conventions.md.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core_model import LatticeCorrelationData, ModelParams
from .errors import InputError, PoleError

__all__ = [
    "BallisticFlag",
    "BALLISTIC",
    "LatticeMomentInputs",
    "LatticeMSDLaw",
    "laplace_msd",
    "msd_inverse_laplace_closed_form",
    "diffusion_constant",
    "law_to_json",
]


class BallisticFlag:
    """Returned where a vanishing dephasing rate makes the motion ballistic."""

    def __repr__(self):
        return "BALLISTIC"

    def __eq__(self, other):
        return isinstance(other, BallisticFlag)

    def __hash__(self):
        return hash("BallisticFlag")


BALLISTIC = BallisticFlag()


@dataclass(frozen=True)
class LatticeMomentInputs:
    """Everything the moment chain needs at k = 0.

    Per-axis arrays of length d: dephasing rates at e_m and 2 e_m, kernel
    probes K(0, +-e_m, 0), K(0, +-2e_m, 0), derivative probes
    d_m K(0, +-e_m, 0) and d_m^2 K(0, 0, 0).  ``r000`` is K(0, 0, 0) > 0.
    """

    c1: float
    r000: float
    gamma: np.ndarray
    gamma2: np.ndarray
    r_e: np.ndarray = None
    r_minus_e: np.ndarray = None
    r_2e: np.ndarray = None
    r_minus_2e: np.ndarray = None
    d1_e: np.ndarray = None
    d1_minus_e: np.ndarray = None
    d2_zero: np.ndarray = None

    def __post_init__(self):
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        gamma2 = np.atleast_1d(np.asarray(self.gamma2, dtype=float))
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "gamma2", gamma2)
        if not self.r000 > 0:
            raise InputError(f"K(0,0,0) must be positive, got {self.r000}")
        d = gamma.size
        for name in ("r_e", "r_minus_e", "r_2e", "r_minus_2e", "d1_e", "d1_minus_e", "d2_zero"):
            val = getattr(self, name)
            arr = np.zeros(d, dtype=complex) if val is None else np.atleast_1d(np.asarray(val, dtype=complex))
            if arr.size != d:
                raise InputError(f"{name} must have one entry per axis")
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.gamma.size

    @classmethod
    def point_localized(cls, corr, params: ModelParams):
        """Particle initially at one site: K(0, Y, 0) = delta(Y), trace 1."""
        data = LatticeCorrelationData.from_correlation(corr, params)
        return cls(c1=params.hbar / params.mass, r000=1.0, gamma=data.gamma, gamma2=data.gamma2)

    @classmethod
    def from_lattice_data(cls, data: LatticeCorrelationData, params: ModelParams, r000=1.0, **probes):
        return cls(c1=params.hbar / params.mass, r000=r000, gamma=data.gamma, gamma2=data.gamma2, **probes)


def laplace_msd(s, inputs: LatticeMomentInputs) -> complex:
    """-sum_m d^2/dk_m^2 of the transformed kernel at (k, Y) = (0, 0).

    Assembled exactly from the closed moment chain; the leading small-s
    behaviour is (2 c1)^2 / s^2 * sum_m 1/h(e_m, s) * K(0,0,0) and the
    O(1/s) remainder from the initial-kernel probes is kept explicitly.
    Real at real s for Hermitian inputs.  Poles: s = 0, s = -gamma values.
    """
    s = complex(s)
    c1 = inputs.c1
    h1 = s + inputs.gamma
    h2 = s + inputs.gamma2
    if s == 0 or np.any(h1 == 0) or np.any(h2 == 0):
        raise PoleError(f"laplace_msd evaluated at a pole: s={s}, gamma={inputs.gamma}")

    # first-derivative difference M1_m(e_m) - M1_m(-e_m), axis-wise
    m1_diff = (c1 * ((inputs.r_2e + inputs.r_minus_2e) / h2 - 2.0 * inputs.r000 / s)
               + (inputs.d1_e - inputs.d1_minus_e)) / h1
    s_m2 = 2.0 * c1 * m1_diff + inputs.d2_zero
    total = np.sum(s_m2) / s
    return complex(-total)


@dataclass(frozen=True)
class LatticeMSDLaw:
    """Closed-form inverse transform of the leading Laplace-domain term.

    law(t) = cd * sum_m [exp(-Gamma_m t)/Gamma_m^2 + t/Gamma_m - 1/Gamma_m^2],
    with a t^2/2 branch for axes with Gamma_m = 0.  Short times
    (t << 1/Gamma) look ballistic, long times (t >> 1/Gamma) diffusive.
    """

    cd: float
    gamma: np.ndarray
    trace_factor: float = 1.0
    zero_tol: float = field(default=1e-14)

    def __post_init__(self):
        object.__setattr__(self, "gamma", np.atleast_1d(np.asarray(self.gamma, dtype=float)))

    @classmethod
    def from_inputs(cls, inputs: LatticeMomentInputs, params: ModelParams = None):
        c1 = inputs.c1 if params is None else params.hbar / params.mass
        return cls(cd=(2.0 * c1) ** 2 * float(inputs.r000), gamma=inputs.gamma)

    @property
    def t_ballistic_below(self) -> float:
        gmax = float(np.max(self.gamma, initial=0.0))
        return 0.05 / gmax if gmax > 0 else np.inf

    @property
    def t_diffusive_above(self) -> float:
        g_pos = self.gamma[self.gamma > self.zero_tol]
        return 10.0 / float(np.min(g_pos)) if g_pos.size else np.inf


def msd_inverse_laplace_closed_form(t, law: LatticeMSDLaw):
    """Evaluate the lattice law at nonnegative times (vectorised)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InputError("t must be nonnegative")
    out = np.zeros(np.shape(t))
    for g in law.gamma:
        if g <= law.zero_tol:
            out = out + 0.5 * t**2  # ballistic channel
        else:
            out = out + np.exp(-g * t) / g**2 + t / g - 1.0 / g**2
    result = law.cd * law.trace_factor * out
    return result if np.ndim(t) else float(result)


def diffusion_constant(inputs: LatticeMomentInputs, trace: float, zero_tol=1e-14):
    """(2 hbar/m)^2 * trace * sum_m 1/Gamma_m, or BALLISTIC if any Gamma_m = 0.

    Strictly positive whenever the disorder is on and every axis dephases.
    """
    gamma = inputs.gamma
    if np.any(gamma <= zero_tol):
        return BALLISTIC
    return float((2.0 * inputs.c1) ** 2 * trace * np.sum(1.0 / gamma))


def law_to_json(law: LatticeMSDLaw, inputs: LatticeMomentInputs, trace: float, **kwargs) -> str:
    """Serialise {Cd, gamma[], D or "ballistic"}."""
    d = diffusion_constant(inputs, trace)
    payload = {
        "Cd": law.cd,
        "gamma": [float(g) for g in law.gamma],
        "D": "ballistic" if isinstance(d, BallisticFlag) else d,
    }
    return json.dumps(payload, **kwargs)
