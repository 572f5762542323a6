"""Time evolution per mode: exact eigen-expansion for exponential kernels,
history-quadrature stepping for general kernels, energy traces.

For ``g(s) = exp(-delta*s)`` each mode reduces to the five-dimensional system
``(v, u, p, q, I)`` with the convolved history ``I' = v - delta*I``, so the
trajectory is an exact five-term exponential sum.  That removes all
time-discretization error from decay-rate measurements.  The memory part of
the energy,

    xi^a * int_0^inf g(s) |v(t) - v(t-s)|^2 ds,

splits at ``s = t``: the recent part is a pairwise sum of elementary
exponential integrals over the eigenvalue sums ``lam_i + conj(lam_j)``, the
remote part is closed form in the prescribed history (zero or
polynomial-times-exponential terms).

General kernels satisfying the positivity/pinch hypotheses are stepped with
an implicit-midpoint scheme whose memory force uses trapezoidal convolution
over the stored trajectory, truncated where the kernel falls below 1e-14 of
its initial value (the pinch bounds the discarded tail).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .model import (
    ExponentialKernel,
    InvalidModelError,
    Kernel,
    ModalState,
    ModeGrid,
    ModelParams,
    kernel_mass,
)
from .spectral import eigvec_at, modal_generator, quintic_coeffs, quintic_roots


# ---------------------------------------------------------------------------
# prescribed histories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroHistory:
    """No prescribed motion before t = 0."""


@dataclass(frozen=True)
class HistoryTerm:
    """One term ``coef * s^power * exp(-rate*s)`` of a prescribed history."""

    coef: complex
    power: int
    rate: float

    def __post_init__(self) -> None:
        if self.power < 0:
            raise InvalidModelError(f"power must be >= 0, got {self.power}")
        if not self.rate > 0.0:
            raise InvalidModelError(f"rate must be > 0, got {self.rate}")


@dataclass(frozen=True)
class ExponentialPolyHistory:
    terms: tuple[HistoryTerm, ...]

    def value(self, s):
        s = np.asarray(s, dtype=float)
        acc = np.zeros_like(s, dtype=complex)
        for t in self.terms:
            acc = acc + t.coef * s**t.power * np.exp(-t.rate * s)
        return acc


History = ZeroHistory | ExponentialPolyHistory


def history_mass(history: History, delta: float) -> complex:
    """``int_0^inf exp(-delta*s) h(s) ds`` (also the initial convolved
    history I(0) for the exponential kernel)."""
    if isinstance(history, ZeroHistory):
        return 0.0
    acc = 0.0 + 0.0j
    for t in history.terms:
        acc += t.coef * math.factorial(t.power) / (delta + t.rate) ** (t.power + 1)
    return acc


def history_sq_mass(history: History, delta: float) -> float:
    """``int_0^inf exp(-delta*s) |h(s)|^2 ds``."""
    if isinstance(history, ZeroHistory):
        return 0.0
    acc = 0.0 + 0.0j
    for t1 in history.terms:
        for t2 in history.terms:
            n = t1.power + t2.power
            c = delta + t1.rate + t2.rate
            acc += t1.coef * np.conj(t2.coef) * math.factorial(n) / c ** (n + 1)
    return float(acc.real)


# ---------------------------------------------------------------------------
# exact modal evolution (exponential kernel)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModalTrajectory:
    """Exact solution of one mode as a five-term exponential sum.

    ``state_at`` reconstructs ``(v, u, p, q, I)``; ``v_amplitudes`` are the
    coefficients of ``v(t) = sum a_i exp(lam_i t)``.  When the eigenvalue
    separation check failed, ``dense`` is set and reconstruction goes through
    the matrix exponential of the stored generator instead.
    """

    k: int
    xi: float
    delta: float
    eigenvalues: np.ndarray
    amplitudes: np.ndarray | None
    eigvecs: np.ndarray | None
    history: History
    x0: np.ndarray
    generator: np.ndarray
    dense: bool = False

    @property
    def v_amplitudes(self) -> np.ndarray:
        if self.dense:
            raise InvalidModelError("dense fallback trajectory has no amplitude expansion")
        return self.eigvecs[0, :] * self.amplitudes

    def state_at(self, t):
        t = np.asarray(t, dtype=float)
        if self.dense:
            if t.ndim == 0:
                return sla.expm(self.generator * float(t)) @ self.x0
            return np.stack([sla.expm(self.generator * ti) @ self.x0 for ti in t], axis=-1)
        phases = np.exp(np.multiply.outer(self.eigenvalues, t))
        return self.eigvecs @ (self.amplitudes[(...,) + (None,) * t.ndim] * phases)

    def v_at(self, t):
        return self.state_at(t)[0]


def exact_modal_evolve(
    initial: ModalState,
    params: ModelParams,
    delta: float,
    grid: ModeGrid,
    history: History = ZeroHistory(),
) -> ModalTrajectory:
    """Diagonalize the reduced five-dimensional generator and fit amplitudes.

    The initial convolved history is ``I(0) = int g h`` (closed form).  If
    two eigenvalues collide to within 1e-8 of the spectral scale the
    eigenvector solve is refused and a dense matrix-exponential trajectory is
    returned, flagged by ``dense``.
    """
    xi = grid.xi_of(initial.k)
    branch = quintic_roots(quintic_coeffs(initial.k, params, delta, grid), params)
    lams = branch.all_roots()
    gen = modal_generator(initial.k, params, delta, grid)
    i0 = history_mass(history, delta)
    x0 = np.array([initial.v, initial.u, initial.p, initial.q, i0], dtype=complex)

    scale = max(1.0, float(np.max(np.abs(lams))))
    sep = min(
        abs(lams[i] - lams[j]) for i in range(5) for j in range(i + 1, 5)
    )
    if sep < 1e-8 * scale:
        return ModalTrajectory(
            initial.k, xi, delta, lams, None, None, history, x0, gen, dense=True
        )

    vmat = np.stack([eigvec_at(lam, xi, params, delta) for lam in lams], axis=1)
    amps = np.linalg.solve(vmat, x0)
    return ModalTrajectory(initial.k, xi, delta, lams, amps, vmat, history, x0, gen)


# ---------------------------------------------------------------------------
# memory energy, closed form
# ---------------------------------------------------------------------------


def _exp_diff_over(z, w, t):
    """``(exp(w*t) - exp((w-z)*t)) / z`` with the ``z -> 0`` limit
    ``t*exp(w*t)``; both exponents have nonpositive real part here, so the
    combined form never overflows."""
    zt = z * t
    small = np.abs(zt) < 1e-8
    safe_z = np.where(small, 1.0, z)
    main = (np.exp(w * t) - np.exp((w - z) * t)) / safe_z
    series = t * np.exp(w * t) * (1.0 - zt / 2.0 + zt * zt / 6.0)
    return np.where(small, series, main)


def memory_energy_closed_form(traj: ModalTrajectory, t, params: ModelParams) -> np.ndarray:
    """``xi^a * int_0^inf exp(-delta*s) |v(t) - v(t-s)|^2 ds`` at times t.

    The ``s < t`` part expands into pairwise exponential integrals of the
    amplitude representation; the ``s > t`` part is
    ``e^(-delta*t) * (|v|^2/delta - 2 Re(conj(v) H1) + H2)`` with the two
    history moments ``H1, H2``.  Dense-fallback trajectories must use the
    quadrature route instead.
    """
    if traj.dense:
        raise InvalidModelError("closed-form memory energy needs the amplitude expansion")
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    delta = traj.delta
    a_coef = traj.v_amplitudes
    lams = traj.eigenvalues
    tt = t[None, None, ...]
    w = (lams[:, None] + lams.conj()[None, :])[..., None]
    pair = a_coef[:, None, None] * a_coef.conj()[None, :, None]

    inner = (
        _exp_diff_over(np.full_like(w, delta, dtype=complex), w, tt)
        - _exp_diff_over(delta + lams[:, None, None], w, tt)
        - _exp_diff_over(delta + lams.conj()[None, :, None], w, tt)
        + _exp_diff_over(delta + w, w, tt)
    )
    recent = np.sum(pair * inner, axis=(0, 1)).real

    v_t = np.tensordot(a_coef, np.exp(np.multiply.outer(lams, t)), axes=(0, 0))
    h1 = history_mass(traj.history, delta)
    h2 = history_sq_mass(traj.history, delta)
    remote = np.exp(-delta * t) * (
        np.abs(v_t) ** 2 / delta - 2.0 * (np.conj(v_t) * h1).real + h2
    )
    out = traj.xi**params.a * (recent + remote)
    return float(out[0]) if scalar else out


def memory_energy_quadrature(
    traj: ModalTrajectory, t: float, params: ModelParams, n: int = 200
) -> float:
    """Gauss-Legendre quadrature of the recent part plus the closed-form
    remote part; the independent check on the closed form."""
    delta = traj.delta
    gx, gw = np.polynomial.legendre.leggauss(n)
    s = 0.5 * t * (gx + 1.0)
    ws = 0.5 * t * gw
    v_t = complex(traj.v_at(t))
    eta = v_t - traj.v_at(t - s)
    recent = float(np.sum(ws * np.exp(-delta * s) * np.abs(eta) ** 2))
    h1 = history_mass(traj.history, delta)
    h2 = history_sq_mass(traj.history, delta)
    remote = math.exp(-delta * t) * (abs(v_t) ** 2 / delta - 2.0 * (np.conj(v_t) * h1).real + h2)
    return traj.xi**params.a * (recent + remote)


# ---------------------------------------------------------------------------
# energy traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyTrace:
    """Squared-norm trace with its five-part split.

    ``residual`` holds the pointwise defect of the dissipation identity
    ``dE/dt = (1/2) int g'(s) |A^(a/2) eta|^2 ds`` for the physical energy
    ``E = total/2`` (interior points only; NaN at the ends).  For the
    exponential kernel the right-hand side is ``-(delta/2)`` times the
    memory part.
    """

    times: np.ndarray
    stiffness: np.ndarray
    kinetic_v: np.ndarray
    coupling: np.ndarray
    kinetic_p: np.ndarray
    memory: np.ndarray
    residual: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.stiffness + self.kinetic_v + self.coupling + self.kinetic_p + self.memory

    def norm(self) -> np.ndarray:
        return np.sqrt(self.total)


def _three_point_derivative(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Second-order derivative on a possibly nonuniform grid; NaN ends."""
    d = np.full_like(f, np.nan)
    x0, x1, x2 = x[:-2], x[1:-1], x[2:]
    f0, f1, f2 = f[:-2], f[1:-1], f[2:]
    d[1:-1] = (
        f0 * (x1 - x2) / ((x0 - x1) * (x0 - x2))
        + f1 * (2.0 * x1 - x0 - x2) / ((x1 - x0) * (x1 - x2))
        + f2 * (x1 - x0) / ((x2 - x0) * (x2 - x1))
    )
    return d


def _parts_from_state(v, u, p, q, xi, params: ModelParams, zeta: float):
    stiff = (params.alpha1 * xi - zeta * xi**params.a) * np.abs(v) ** 2
    kin_v = params.rho * np.abs(u) ** 2
    coup = params.beta * xi * np.abs(params.gamma * v - p) ** 2
    kin_p = params.mu * np.abs(q) ** 2
    return stiff, kin_v, coup, kin_p


def energy_trace(
    trajs: list[ModalTrajectory],
    params: ModelParams,
    kernel: ExponentialKernel,
    times: np.ndarray,
) -> EnergyTrace:
    """Exact multi-mode energy trace on the given times."""
    times = np.asarray(times, dtype=float)
    zeta = kernel.zeta
    stiff = np.zeros_like(times)
    kin_v = np.zeros_like(times)
    coup = np.zeros_like(times)
    kin_p = np.zeros_like(times)
    mem = np.zeros_like(times)
    for traj in trajs:
        states = traj.state_at(times)
        s, kv, c, kp = _parts_from_state(
            states[0], states[1], states[2], states[3], traj.xi, params, zeta
        )
        stiff += s
        kin_v += kv
        coup += c
        kin_p += kp
        if traj.dense:
            mem += np.array(
                [memory_energy_quadrature(traj, float(t), params) for t in times]
            )
        else:
            mem += memory_energy_closed_form(traj, times, params)
    total = stiff + kin_v + coup + kin_p + mem
    de = 0.5 * _three_point_derivative(times, total)
    residual = np.abs(de + 0.5 * kernel.delta * mem)
    return EnergyTrace(times, stiff, kin_v, coup, kin_p, mem, residual)


def dissipation_residual(trace: EnergyTrace, i: int) -> float:
    """Pointwise defect of the dissipation identity at an interior index."""
    r = trace.residual[i]
    if np.isnan(r):
        raise IndexError("residual is only defined at interior trace points")
    return float(r)


# ---------------------------------------------------------------------------
# general kernels: history-quadrature stepping
# ---------------------------------------------------------------------------


def _kernel_truncation(kernel: Kernel) -> float:
    g0 = float(kernel.g(0.0))
    target = 1e-14 * g0
    if isinstance(kernel, ExponentialKernel):
        return math.log(g0 / target) / kernel.delta
    g_tab = kernel.g_values
    below = np.nonzero(g_tab < target)[0]
    if below.size:
        return float(kernel.s[below[0]])
    return float(kernel.s[-1] + math.log(g_tab[-1] / target) / kernel.k1)


def evolve_general_kernel(
    initial: ModalState,
    params: ModelParams,
    kernel: Kernel,
    grid: ModeGrid,
    T: float,
    dt: float,
    sample_every: int = 10,
) -> EnergyTrace:
    """Implicit-midpoint stepping of one mode with trapezoidal convolution
    memory, for any kernel satisfying the positivity/pinch hypotheses.

    The prescribed history is zero.  The memory force at the midpoint is the
    average of the endpoint convolutions, closed by one fixed-point
    correction of the new endpoint, which keeps the scheme second order.
    The energy is sampled every ``sample_every`` steps with the history
    coordinate reconstructed from the stored trajectory.
    """
    xi = grid.xi_of(initial.k)
    a = params.a
    n_steps = int(round(T / dt))
    s_max = _kernel_truncation(kernel)
    window = min(n_steps, int(math.ceil(s_max / dt)))

    g_grid = np.asarray(kernel.g(dt * np.arange(window + 1)), dtype=float)
    if np.any(g_grid <= 0.0):
        raise InvalidModelError("kernel must stay positive on the stepping window")
    dg = np.diff(g_grid)
    if np.any(dg >= 0.0):
        i = int(np.argmax(dg >= 0.0))
        raise InvalidModelError(
            f"kernel stopped decreasing at s ~ {dt * (i + 1):.6g}; pinch hypothesis violated"
        )

    # remaining-mass table for the remote part of the energy
    cumulative = np.concatenate([[0.0], np.cumsum(0.5 * (g_grid[1:] + g_grid[:-1]) * dt)])
    zeta = kernel_mass(kernel)
    tail_after_window = zeta - cumulative[-1]

    amat = np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [-params.alpha * xi / params.rho, 0.0, params.gamma * params.beta * xi / params.rho, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [params.gamma * params.beta * xi / params.mu, 0.0, -params.beta * xi / params.mu, 0.0],
        ]
    )
    eye = np.eye(4)
    lhs = np.linalg.inv(eye - 0.5 * dt * amat)
    rhs = eye + 0.5 * dt * amat

    y = np.array([initial.v, initial.u, initial.p, initial.q], dtype=complex)
    v_hist = np.empty(n_steps + 1, dtype=complex)
    v_hist[0] = y[0]
    states = {0: y.copy()}

    def convolution(n: int, v_new: complex | None = None) -> complex:
        m = min(n, window)
        if m == 0:
            return 0.0
        v_slice = v_hist[n - m : n + 1][::-1].copy()
        if v_new is not None:
            v_slice[0] = v_new
        weights = g_grid[: m + 1].copy()
        weights[0] *= 0.5
        weights[-1] *= 0.5
        return dt * np.dot(weights, v_slice)

    force = np.zeros(4, dtype=complex)
    conv_n = 0.0 + 0.0j
    for n in range(n_steps):
        v_guess = y[0] if n == 0 else 2.0 * v_hist[n] - v_hist[n - 1]
        for _ in range(2):
            conv_next = convolution(n + 1, v_new=v_guess)
            force[1] = xi**a * 0.5 * (conv_n + conv_next) / params.rho
            y_next = lhs @ (rhs @ y + dt * force)
            v_guess = y_next[0]
        y = y_next
        v_hist[n + 1] = y[0]
        conv_n = convolution(n + 1)
        if (n + 1) % sample_every == 0:
            states[n + 1] = y.copy()

    sample_idx = np.arange(0, n_steps + 1, sample_every)
    times = dt * sample_idx
    stiff = np.zeros(times.size)
    kin_v = np.zeros(times.size)
    coup = np.zeros(times.size)
    kin_p = np.zeros(times.size)
    mem = np.zeros(times.size)
    mem_deriv = np.zeros(times.size)
    g_prime_grid = np.asarray(kernel.g_prime(dt * np.arange(window + 1)), dtype=float)

    for out_i, n in enumerate(sample_idx):
        v, u, p, q = states[int(n)]
        s, kv, c, kp = _parts_from_state(v, u, p, q, xi, params, zeta)
        stiff[out_i] = s
        kin_v[out_i] = kv
        coup[out_i] = c
        kin_p[out_i] = kp
        m = min(int(n), window)
        eta = v - v_hist[int(n) - m : int(n) + 1][::-1]
        wts = g_grid[: m + 1].copy()
        wts_p = g_prime_grid[: m + 1].copy()
        if m > 0:
            wts[0] *= 0.5
            wts[-1] *= 0.5
            wts_p[0] *= 0.5
            wts_p[-1] *= 0.5
        recent = dt * float(np.dot(wts, np.abs(eta) ** 2)) if m > 0 else 0.0
        recent_p = dt * float(np.dot(wts_p, np.abs(eta) ** 2)) if m > 0 else 0.0
        remaining = zeta - cumulative[m] if m < window else tail_after_window
        mem[out_i] = xi**a * (recent + abs(v) ** 2 * remaining)
        # remote part of the g' integral: eta = v(t) beyond s = t, so
        # int_t^inf g' |eta|^2 = -g(t) |v|^2
        g_at_t = g_grid[m] if int(n) <= window else float(kernel.g(dt * int(n)))
        mem_deriv[out_i] = xi**a * (recent_p - g_at_t * abs(v) ** 2)

    total = stiff + kin_v + coup + kin_p + mem
    de = 0.5 * _three_point_derivative(times, total)
    residual = np.abs(de - 0.5 * mem_deriv)
    return EnergyTrace(times, stiff, kin_v, coup, kin_p, mem, residual)


# ---------------------------------------------------------------------------
# canonical initial-data families
# ---------------------------------------------------------------------------


def single_mode_data(k: int, v0: complex = 1.0) -> ModalState:
    return ModalState(k, v0, 0.0, 0.0, 0.0)


def marginal_data_amplitudes(grid: ModeGrid, n_modes: int) -> np.ndarray:
    """Displacement amplitudes ``xi_k^(-1) / k^0.51``: graph norm barely
    finite, so the multi-mode decay saturates the worst-case rate."""
    k = np.arange(1, n_modes + 1, dtype=float)
    return grid.xi[:n_modes] ** (-1.0) / k**0.51


def marginal_initial_data(grid: ModeGrid, n_modes: int) -> list[ModalState]:
    amps = marginal_data_amplitudes(grid, n_modes)
    return [ModalState(k, amps[k - 1], 0.0, 0.0, 0.0) for k in range(1, n_modes + 1)]


__all__ = [
    "EnergyTrace",
    "ExponentialPolyHistory",
    "History",
    "HistoryTerm",
    "ModalTrajectory",
    "ZeroHistory",
    "dissipation_residual",
    "energy_trace",
    "evolve_general_kernel",
    "exact_modal_evolve",
    "history_mass",
    "history_sq_mass",
    "marginal_data_amplitudes",
    "marginal_initial_data",
    "memory_energy_closed_form",
    "memory_energy_quadrature",
    "single_mode_data",
]
