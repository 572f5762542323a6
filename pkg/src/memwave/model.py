"""Model data: physical parameters, memory kernels, mode grids, modal states.

The system under study couples two second-order equations through a strictly
positive self-adjoint operator ``A`` with eigenvalues ``0 < xi_1 < xi_2 < ...``
and damps the first one through a single infinite-memory convolution carrying
the fractional power ``A^a``, ``a in [0, 1)``::

    rho * v_tt = -alpha*A*v + gamma*beta*A*p + int_0^inf g(s) A^a v(t-s) ds
    mu  * p_tt = -beta *A*p + gamma*beta*A*v

Everything in this package works per mode: along the eigenfunction of ``xi_k``
the state is the coefficient tuple ``(v, u, p, q)`` (displacements and
velocities) plus a representation of the shifted history
``eta(t, s) = v(t) - v(t - s)``.

The squared energy norm of a mode is

    alpha1*xi*|v|^2 - zeta*xi^a*|v|^2 + rho*|u|^2
        + beta*xi*|gamma*v - p|^2 + mu*|q|^2 + xi^a * int g(s)|eta(s)|^2 ds

with ``alpha1 = alpha - gamma^2*beta > 0`` and ``zeta = int_0^inf g``.  The
first two terms stay uniformly positive exactly when the coercivity margin
``kappa = alpha1 - zeta*xi_1^(a-1)`` is positive; ``validate_params`` checks
that together with the kernel hypotheses (positivity, strictly negative
derivative pinched between two exponential rates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.integrate import simpson


class InvalidModelError(ValueError):
    """Raised when constructor-level constraints on the model data fail."""


class UnresolvedMemoryError(RuntimeError):
    """Raised when an operation needs pointwise history values that the
    state's memory representation cannot provide."""


class DomainError(ValueError):
    """Raised when a state lies outside the generator's domain for the
    requested operation."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the coupled system.

    ``alpha1 = alpha - gamma^2*beta`` is derived.  Its positivity is a
    standing assumption of the model; it is reported by ``validate_params``
    rather than enforced here so that invalid parameter sets can be diagnosed.
    The fractional order must satisfy ``a in [0, 1)``: the limit ``a = 1``
    (viscoelastic damping) is out of scope and rejected outright.
    """

    rho: float
    mu: float
    alpha: float
    beta: float
    gamma: float
    a: float

    def __post_init__(self) -> None:
        for name in ("rho", "mu", "alpha", "beta", "gamma"):
            if not getattr(self, name) > 0.0:
                raise InvalidModelError(f"{name} must be > 0, got {getattr(self, name)}")
        if not (0.0 <= self.a < 1.0):
            raise InvalidModelError(f"fractional order a must lie in [0, 1), got {self.a}")

    @property
    def alpha1(self) -> float:
        return self.alpha - self.gamma**2 * self.beta


# ---------------------------------------------------------------------------
# memory kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialKernel:
    """Kernel ``g(s) = exp(-delta*s)``; mass ``zeta = 1/delta`` and the
    derivative bounds collapse to ``k0 = k1 = delta``."""

    delta: float

    def __post_init__(self) -> None:
        if not self.delta > 0.0:
            raise InvalidModelError(f"delta must be > 0, got {self.delta}")

    @property
    def zeta(self) -> float:
        return 1.0 / self.delta

    @property
    def k0(self) -> float:
        return self.delta

    @property
    def k1(self) -> float:
        return self.delta

    def g(self, s):
        return np.exp(-self.delta * np.asarray(s, dtype=float))

    def g_prime(self, s):
        return -self.delta * self.g(s)


@dataclass(frozen=True)
class TabulatedKernel:
    """Kernel given by samples ``(s_i, g(s_i))`` on an increasing grid
    starting at 0, with declared derivative pinch ``-k0*g <= g' <= -k1*g``.

    Beyond the last sample the kernel is extrapolated by the slowest decay the
    pinch allows, ``g(s) = g(s_N) * exp(-k1*(s - s_N))``, which also closes
    the mass integral.
    """

    s: np.ndarray
    g_values: np.ndarray
    k0: float
    k1: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "s", _freeze(self.s))
        object.__setattr__(self, "g_values", _freeze(self.g_values))
        if self.s.ndim != 1 or self.s.shape != self.g_values.shape or self.s.size < 3:
            raise InvalidModelError("tabulated kernel needs matching 1-d s/g arrays, >= 3 samples")
        if self.s[0] != 0.0 or np.any(np.diff(self.s) <= 0):
            raise InvalidModelError("kernel samples must start at s=0 and increase strictly")
        if not (0.0 < self.k1 <= self.k0):
            raise InvalidModelError(f"need 0 < k1 <= k0, got k0={self.k0}, k1={self.k1}")

    @property
    def zeta(self) -> float:
        return kernel_mass(self)

    def g(self, s):
        s = np.asarray(s, dtype=float)
        inside = np.interp(s, self.s, self.g_values)
        tail = self.g_values[-1] * np.exp(-self.k1 * (s - self.s[-1]))
        return np.where(s <= self.s[-1], inside, tail)

    def g_prime(self, s):
        # centred finite differences of the table; forward/backward at the ends
        d = np.gradient(self.g_values, self.s)
        s = np.asarray(s, dtype=float)
        inside = np.interp(s, self.s, d)
        tail = -self.k1 * self.g_values[-1] * np.exp(-self.k1 * (s - self.s[-1]))
        return np.where(s <= self.s[-1], inside, tail)


Kernel = Union[ExponentialKernel, TabulatedKernel]


def kernel_mass(kernel: Kernel) -> float:
    """Total mass ``zeta = int_0^inf g(s) ds``.

    Exponential kernels are closed form.  Tabulated kernels use composite
    Simpson quadrature over the samples plus the exponential tail bound
    ``g(s_N)/k1`` dictated by the derivative pinch.
    """
    if isinstance(kernel, ExponentialKernel):
        return 1.0 / kernel.delta
    body = float(simpson(kernel.g_values, x=kernel.s))
    tail = kernel.g_values[-1] / kernel.k1
    zeta = body + tail
    if not (zeta > 0.0 and math.isfinite(zeta)):
        raise InvalidModelError(f"kernel mass is not a positive finite number: {zeta}")
    return zeta


# ---------------------------------------------------------------------------
# mode grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DirichletLaplacianGrid:
    """Eigenvalues ``xi_k = (k*pi/L)^2`` of the 1-d Dirichlet Laplacian."""

    length: float
    count: int

    def __post_init__(self) -> None:
        if not self.length > 0.0:
            raise InvalidModelError(f"length must be > 0, got {self.length}")
        if self.count < 1:
            raise InvalidModelError(f"count must be >= 1, got {self.count}")

    @property
    def xi(self) -> np.ndarray:
        k = np.arange(1, self.count + 1, dtype=float)
        return _freeze((k * math.pi / self.length) ** 2)

    def xi_of(self, k: int) -> float:
        if not 1 <= k <= self.count:
            raise IndexError(f"mode index {k} outside 1..{self.count}")
        return (k * math.pi / self.length) ** 2


@dataclass(frozen=True)
class ExplicitGrid:
    """Explicit strictly increasing positive eigenvalue sequence."""

    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _freeze(self.values))
        if self.values.ndim != 1 or self.values.size < 1:
            raise InvalidModelError("explicit grid needs a nonempty 1-d array")
        if self.values[0] <= 0.0 or np.any(np.diff(self.values) <= 0):
            raise InvalidModelError("eigenvalues must be strictly increasing and positive")

    @property
    def count(self) -> int:
        return int(self.values.size)

    @property
    def xi(self) -> np.ndarray:
        return self.values

    def xi_of(self, k: int) -> float:
        if not 1 <= k <= self.count:
            raise IndexError(f"mode index {k} outside 1..{self.count}")
        return float(self.values[k - 1])


ModeGrid = Union[DirichletLaplacianGrid, ExplicitGrid]


# ---------------------------------------------------------------------------
# modal states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantEta:
    """History coordinate constant in s: ``eta(s) = value`` for s > 0.

    This is the shifted-history state produced by a vanishing prescribed
    history, ``eta(0, s) = v(0) - 0 = v0``.  Its weighted mass is
    ``zeta*|value|^2`` and its s-derivative vanishes.
    """

    value: complex = 0.0


@dataclass(frozen=True)
class EtaOnNodes:
    """History coordinate sampled at quadrature nodes of the memory weight.

    ``weights`` integrate against ``g``; the reconstruction is understood as
    the polynomial interpolant through ``{0} u nodes`` pinned to 0 at s = 0,
    so the constraint ``eta(0) = 0`` holds by construction.
    """

    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", _freeze(self.nodes))
        object.__setattr__(self, "weights", _freeze(self.weights))
        values = np.asarray(self.values, dtype=complex)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if not (self.nodes.shape == self.weights.shape == self.values.shape):
            raise InvalidModelError("nodes, weights and values must share a shape")


@dataclass(frozen=True)
class AuxiliaryI:
    """Convolved history ``I = int_0^inf g(s) v(t-s) ds`` for exponential
    kernels.  Enough for the reduced five-dimensional dynamics but not for
    energies, which need pointwise eta values."""

    value: complex


MemoryRep = Union[ConstantEta, EtaOnNodes, AuxiliaryI]

ZERO_MEMORY = ConstantEta(0.0)


@dataclass(frozen=True)
class ModalState:
    """Coefficients of one mode: displacements/velocities plus history."""

    k: int
    v: complex
    u: complex
    p: complex
    q: complex
    memory: MemoryRep = ZERO_MEMORY


# ---------------------------------------------------------------------------
# energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyBreakdown:
    """Five-part split of the squared energy norm."""

    stiffness: float
    kinetic_v: float
    coupling: float
    kinetic_p: float
    memory: float

    @property
    def total(self) -> float:
        return self.stiffness + self.kinetic_v + self.coupling + self.kinetic_p + self.memory


def memory_mass(memory: MemoryRep, kernel: Kernel) -> float:
    """``int_0^inf g(s) |eta(s)|^2 ds`` for a resolvable representation."""
    if isinstance(memory, ConstantEta):
        return kernel_mass(kernel) * abs(memory.value) ** 2
    if isinstance(memory, EtaOnNodes):
        return float(np.sum(memory.weights * np.abs(memory.values) ** 2))
    raise UnresolvedMemoryError(
        "auxiliary convolved history carries no pointwise eta values; "
        "energies need ConstantEta or EtaOnNodes"
    )


def energy(
    states: Iterable[ModalState],
    params: ModelParams,
    kernel: Kernel,
    grid: ModeGrid,
) -> EnergyBreakdown:
    """Squared energy norm of a multi-mode state, split into its five parts.

    Mode ``k`` contributes ``alpha1*xi*|v|^2 - zeta*xi^a*|v|^2`` (stiffness),
    ``rho*|u|^2``, ``beta*xi*|gamma*v - p|^2``, ``mu*|q|^2`` and
    ``xi^a * int g |eta|^2``.  Contributions add across modes.
    """
    zeta = kernel_mass(kernel)
    stiffness = kinetic_v = coupling = kinetic_p = mem = 0.0
    for st in states:
        xi = grid.xi_of(st.k)
        stiffness += (params.alpha1 * xi - zeta * xi**params.a) * abs(st.v) ** 2
        kinetic_v += params.rho * abs(st.u) ** 2
        coupling += params.beta * xi * abs(params.gamma * st.v - st.p) ** 2
        kinetic_p += params.mu * abs(st.q) ** 2
        mem += xi**params.a * memory_mass(st.memory, kernel)
    return EnergyBreakdown(stiffness, kinetic_v, coupling, kinetic_p, mem)


def apply_generator(
    state: ModalState,
    params: ModelParams,
    kernel: Kernel,
    grid: ModeGrid,
) -> ModalState:
    """Image of a modal state under the evolution generator.

    Rows: ``v' = u``, ``rho*u' = -alpha*xi*v + gamma*beta*xi*p + zeta*xi^a*v
    - xi^a * int g eta``, ``p' = q``, ``mu*q' = -beta*xi*p + gamma*beta*xi*v``
    and ``eta' = u - eta_s``.  Supported for memory representations whose
    weighted integral and s-derivative are closed form (ConstantEta);
    node-sampled histories should go through the discretized blocks instead.
    """
    if not isinstance(state.memory, ConstantEta):
        raise DomainError("generator application is closed form only for ConstantEta history")
    xi = grid.xi_of(state.k)
    zeta = kernel_mass(kernel)
    g_eta = zeta * state.memory.value
    u_dot = (
        -params.alpha * xi * state.v
        + params.gamma * params.beta * xi * state.p
        + zeta * xi**params.a * state.v
        - xi**params.a * g_eta
    ) / params.rho
    q_dot = (-params.beta * xi * state.p + params.gamma * params.beta * xi * state.v) / params.mu
    # eta constant in s: eta_s = 0, so the history row is the constant u
    return ModalState(state.k, state.u, u_dot, state.q, q_dot, ConstantEta(state.u))


def graph_norm(
    states: Sequence[ModalState],
    params: ModelParams,
    kernel: Kernel,
    grid: ModeGrid,
) -> float:
    """Graph norm ``sqrt(||X||^2 + ||A X||^2)`` with the generator image
    evaluated mode by mode."""
    images = [apply_generator(st, params, kernel, grid) for st in states]
    e_state = energy(states, params, kernel, grid).total
    e_image = energy(images, params, kernel, grid).total
    return math.sqrt(e_state + e_image)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]
    kappa: float | None = field(default=None)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def validate_params(params: ModelParams, kernel: Kernel, grid: ModeGrid) -> ValidationReport:
    """Check every standing assumption and report the coercivity margin.

    Verified: ``alpha1 > 0``; kernel positivity and finite positive mass;
    the derivative pinch ``-k0*g <= g' <= -k1*g`` with ``g' < 0`` (at every
    sample for tabulated kernels, identically for exponential ones);
    the coercivity condition ``zeta*xi_1^(a-1) < alpha1`` whose gap is the
    reported ``kappa``; and the wave-speed split
    ``(beta/mu + alpha/rho)^2 > 4*alpha1*beta/(rho*mu)`` needed for two
    distinct oscillatory branches.
    """
    checks: list[CheckResult] = []

    a1 = params.alpha1
    checks.append(
        CheckResult(
            "alpha1_positive",
            a1 > 0.0,
            f"alpha1 = alpha - gamma^2*beta = {params.alpha} - {params.gamma}^2*{params.beta} = {a1:.6g}",
        )
    )

    try:
        zeta = kernel_mass(kernel)
        mass_ok = zeta > 0.0 and math.isfinite(zeta)
        mass_detail = f"zeta = {zeta:.12g}"
    except InvalidModelError as exc:
        zeta = math.nan
        mass_ok = False
        mass_detail = str(exc)
    checks.append(CheckResult("kernel_mass_finite", mass_ok, mass_detail))

    if isinstance(kernel, ExponentialKernel):
        checks.append(CheckResult("kernel_positive", True, f"g = exp(-{kernel.delta}*s) > 0"))
        checks.append(
            CheckResult("kernel_derivative_pinch", True, f"g' = -{kernel.delta}*g exactly")
        )
    else:
        pos = bool(np.all(kernel.g_values > 0.0))
        checks.append(
            CheckResult(
                "kernel_positive",
                pos,
                "g > 0 at all samples" if pos else f"min g = {kernel.g_values.min():.6g} <= 0",
            )
        )
        d = np.gradient(kernel.g_values, kernel.s)
        neg = bool(np.all(d < 0.0))
        # the pinch is checked with slack for the finite-difference error
        slack = 1e-6 * np.max(np.abs(d)) + 1e-12
        lo_ok = bool(np.all(d >= -kernel.k0 * kernel.g_values - slack))
        hi_ok = bool(np.all(d <= -kernel.k1 * kernel.g_values + slack))
        if neg and lo_ok and hi_ok:
            detail = f"-k0*g <= g' <= -k1*g holds at {kernel.s.size} samples (k0={kernel.k0}, k1={kernel.k1})"
        elif not neg:
            i = int(np.argmax(d))
            detail = f"g'({kernel.s[i]:.6g}) = {d[i]:.6g} >= 0"
        else:
            i = int(np.argmax(d + kernel.k1 * kernel.g_values)) if not hi_ok else int(
                np.argmin(d + kernel.k0 * kernel.g_values)
            )
            detail = (
                f"pinch violated at s = {kernel.s[i]:.6g}: g' = {d[i]:.6g}, "
                f"g = {kernel.g_values[i]:.6g}, k0 = {kernel.k0}, k1 = {kernel.k1}"
            )
        checks.append(CheckResult("kernel_derivative_pinch", neg and lo_ok and hi_ok, detail))

    xi1 = float(grid.xi[0])
    checks.append(
        CheckResult("grid_increasing", True, f"xi_1 = {xi1:.6g}, N = {grid.count} (enforced at construction)")
    )

    kappa: float | None = None
    if mass_ok and a1 > 0.0:
        margin = a1 - zeta * xi1 ** (params.a - 1.0)
        coercive = margin > 0.0
        if coercive:
            kappa = margin
        checks.append(
            CheckResult(
                "coercivity",
                coercive,
                f"alpha1 - zeta*xi_1^(a-1) = {a1:.6g} - {zeta * xi1 ** (params.a - 1.0):.6g} = {margin:.6g}",
            )
        )
    else:
        checks.append(CheckResult("coercivity", False, "skipped: prerequisites failed"))

    s_sum = params.beta / params.mu + params.alpha / params.rho
    prod4 = 4.0 * a1 * params.beta / (params.rho * params.mu)
    checks.append(
        CheckResult(
            "wave_speed_split",
            s_sum**2 > prod4,
            f"(beta/mu + alpha/rho)^2 = {s_sum**2:.6g} vs 4*alpha1*beta/(rho*mu) = {prod4:.6g}",
        )
    )

    return ValidationReport(tuple(checks), kappa)
