"""History discretization, per-mode generator blocks, resolvent-norm sweeps.

The history coordinate ``s`` is collocated at Gauss nodes of the exponential
weight (scaled Gauss-Laguerre), with the interpolation basis pinned to
``eta(0) = 0``.  Two facts make this the right discretization here:

* the quadrature weights integrate the memory energy exactly on the
  polynomial space, so the semidiscrete blocks inherit dissipativity in the
  energy inner product up to roundoff (the quadrature of ``Re(eta' *
  conj(eta))`` is exact at degree ``2M - 1``);
* in energy-orthonormal coordinates (``sqrt(weight)``-scaled nodal values)
  all block entries stay moderate, whereas the raw nodal differentiation
  matrix has entries growing like ``exp(x_max/2)`` and is useless in double
  precision beyond ``M`` around 15.

All norms are therefore computed on congruence-transformed blocks
``B~ = L^T B L^{-T}`` with ``G = L L^T`` the energy weight, where the
resolvent norm is the reciprocal smallest singular value of ``i*tau - B~``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from numpy.polynomial.laguerre import laggauss
from numpy.polynomial.legendre import leggauss

from .model import (
    ExponentialKernel,
    InvalidModelError,
    ModeGrid,
    ModelParams,
)
from .spectral import AsymptoticConstants, quintic_coeffs, quintic_roots


class SingularBlockError(RuntimeError):
    """The shifted block is numerically singular (the sweep hit spectrum)."""


# ---------------------------------------------------------------------------
# quadrature grid for the history coordinate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LaguerreGrid:
    """Gauss nodes/weights for ``int_0^inf exp(-delta*s) f(s) ds`` plus the
    spectral differentiation matrix in sqrt(weight) coordinates.

    ``diff_w`` maps weighted samples ``sqrt(w_m)*eta(s_m)`` of a polynomial
    with ``eta(0) = 0`` (degree <= M) to the weighted samples of its
    derivative.  ``differentiate_weighted`` applies it.
    """

    M: int
    delta: float
    nodes: np.ndarray
    weights: np.ndarray
    diff_w: np.ndarray

    def __post_init__(self) -> None:
        for name in ("nodes", "weights", "diff_w"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def differentiate_weighted(self, values_w: np.ndarray) -> np.ndarray:
        return self.diff_w @ values_w

    def to_weighted(self, values: np.ndarray) -> np.ndarray:
        return self.sqrt_weights * np.asarray(values)

    def from_weighted(self, values_w: np.ndarray) -> np.ndarray:
        return np.asarray(values_w) / self.sqrt_weights


def laguerre_grid(M: int, delta: float) -> LaguerreGrid:
    """Build the scaled Gauss-Laguerre grid and weighted derivative matrix."""
    if M < 1:
        raise InvalidModelError(f"need at least one node, got M={M}")
    if not delta > 0.0:
        raise InvalidModelError(f"delta must be > 0, got {delta}")
    x, w = laggauss(M)
    if not np.all(np.isfinite(x)) or np.any(w <= 0.0):
        raise InvalidModelError(f"Gauss-Laguerre node computation failed for M={M}")

    # Lagrange differentiation on {0} u nodes, column for the pinned zero
    # node dropped, conjugated by sqrt(weights): entries stay O(1).
    full = np.concatenate([[0.0], x])
    diffs = full[:, None] - full[None, :]
    np.fill_diagonal(diffs, 1.0)
    log_bary = -np.sum(np.log(np.abs(diffs)), axis=1)
    sign_bary = np.prod(np.sign(diffs), axis=1)
    log_c = log_bary[1:] - 0.5 * np.log(w)
    ratio = np.exp(log_c[None, :] - log_c[:, None]) * (sign_bary[1:, None] * sign_bary[None, 1:])
    gap = x[:, None] - x[None, :]
    np.fill_diagonal(gap, 1.0)
    dw = ratio / gap
    for i in range(M):
        dw[i, i] = np.sum(1.0 / (full[i + 1] - np.delete(full, i + 1)))
    # physical scaling s = x/delta
    return LaguerreGrid(M=M, delta=delta, nodes=x / delta, weights=w / delta, diff_w=delta * dw)


def weighted_integration_matrix(lag: LaguerreGrid) -> np.ndarray:
    """Matrix of ``f -> int_0^{s_m} f`` in sqrt(weight) coordinates, where
    ``f`` is the degree M-1 interpolant through the node samples.

    This is the discrete Hardy operator of the static solve; its 2-norm stays
    near ``2/delta`` independently of M.
    """
    s = lag.nodes
    M = lag.M
    d = s[:, None] - s[None, :]
    np.fill_diagonal(d, 1.0)
    log_b = -np.sum(np.log(np.abs(d)), axis=1)
    sign_b = np.prod(np.sign(d), axis=1)
    n_gauss = M // 2 + 2
    gx, gw = leggauss(n_gauss)
    q = np.zeros((M, M))
    idx = np.arange(M)
    for m in range(M):
        r = 0.5 * s[m] * (gx + 1.0)
        rw = 0.5 * s[m] * gw
        dr = r[:, None] - s[None, :]
        log_all = np.sum(np.log(np.abs(dr)), axis=1)
        sign_all = np.prod(np.sign(dr), axis=1)
        for j in idx:
            log_lj = log_all - np.log(np.abs(dr[:, j])) + log_b[j]
            sign_lj = sign_all * np.sign(dr[:, j]) * sign_b[j]
            q[m, j] = np.sum(rw * sign_lj * np.exp(log_lj))
    sw = lag.sqrt_weights
    return (sw[:, None] / sw[None, :]) * q


# ---------------------------------------------------------------------------
# per-mode blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModeBlock:
    """Semidiscrete generator of one mode in energy-orthonormal coordinates.

    Coordinates: ``(L_vp^T (v, p); sqrt(rho) u; sqrt(mu) q;
    xi^(a/2) sqrt(w_m) eta_m)`` where ``L_vp`` is the Cholesky factor of the
    2x2 stiffness-plus-coupling weight.  In these coordinates the energy norm
    is Euclidean, so dissipativity reads ``Re <B~ x, x> <= 0`` directly and
    the resolvent norm is ``1/sigma_min(i*tau - B~)``.
    """

    k: int
    xi: float
    M: int
    matrix: np.ndarray
    stiffness_weight: np.ndarray

    def __post_init__(self) -> None:
        for name in ("matrix", "stiffness_weight"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return 4 + self.M

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix)

    def resolvent_norm(self, tau: float) -> float:
        n = self.dim
        shifted = 1j * tau * np.eye(n) - self.matrix
        smin = sla.svdvals(shifted)[-1]
        if smin <= 0.0 or not math.isfinite(smin):
            raise SingularBlockError(f"i*tau - B singular at tau={tau:g} for mode k={self.k}")
        return 1.0 / smin


def stiffness_weight(xi: float, params: ModelParams, zeta: float) -> np.ndarray:
    """2x2 energy weight of the (v, p) pair for one mode."""
    gvv = params.alpha1 * xi - zeta * xi**params.a + params.beta * params.gamma**2 * xi
    gvp = -params.beta * params.gamma * xi
    return np.array([[gvv, gvp], [gvp, params.beta * xi]])


def mode_block(
    k: int,
    params: ModelParams,
    kernel: ExponentialKernel,
    lag: LaguerreGrid,
    grid: ModeGrid,
) -> ModeBlock:
    """Assemble the (4+M)-dimensional block of mode ``k``.

    Rows before the congruence: ``v' = u``; ``u' = (-alpha*xi*v +
    gamma*beta*xi*p + zeta*xi^a*v - xi^a*sum_m w_m eta_m)/rho``; ``p' = q``;
    ``q' = (-beta*xi*p + gamma*beta*xi*v)/mu``; ``eta' = u - D eta``.  The
    eigenvalues lying in the admissibility strip converge spectrally fast to
    the mode's quintic roots; characteristic roots left of ``-delta/2`` are
    not represented (they are not eigenvalues of the full generator either).
    """
    if not isinstance(kernel, ExponentialKernel):
        raise InvalidModelError("mode blocks require the exponential kernel")
    if abs(lag.delta - kernel.delta) > 1e-12 * kernel.delta:
        raise InvalidModelError("Laguerre grid was built for a different decay rate")
    xi = grid.xi_of(k)
    zeta = kernel.zeta
    a = params.a
    M = lag.M
    n = 4 + M
    sw = lag.sqrt_weights
    half_a = xi ** (a / 2.0)

    gvp = stiffness_weight(xi, params, zeta)
    try:
        l_vp = np.linalg.cholesky(gvp)
    except np.linalg.LinAlgError as exc:
        raise InvalidModelError(
            f"energy weight of mode k={k} is not positive definite; "
            "the coercivity condition fails at this mode"
        ) from exc

    # coordinates (v, u, p, q, eta~) with eta~ = xi^(a/2) sqrt(w) eta
    b = np.zeros((n, n))
    b[0, 1] = 1.0
    b[1, 0] = (-params.alpha * xi + zeta * xi**a) / params.rho
    b[1, 2] = params.gamma * params.beta * xi / params.rho
    b[1, 4:] = -(half_a / params.rho) * sw
    b[2, 3] = 1.0
    b[3, 0] = params.gamma * params.beta * xi / params.mu
    b[3, 2] = -params.beta * xi / params.mu
    b[4:, 1] = half_a * sw
    b[4:, 4:] = -lag.diff_w

    # congruence to energy-orthonormal coordinates for (v, p), u, q
    t = np.eye(n)
    t[0, 0] = l_vp[0, 0]
    t[0, 2] = l_vp[1, 0]
    t[2, 0] = l_vp[0, 1]
    t[2, 2] = l_vp[1, 1]
    t[1, 1] = math.sqrt(params.rho)
    t[3, 3] = math.sqrt(params.mu)
    btilde = t @ b @ np.linalg.inv(t)
    return ModeBlock(k=k, xi=xi, M=M, matrix=btilde, stiffness_weight=gvp)


# ---------------------------------------------------------------------------
# resolvent norms along the imaginary axis
# ---------------------------------------------------------------------------

FIRST_MODES_FLOOR = 10
CUTOFF_FACTOR = 4.0


class ResolventSweeper:
    """Caches per-mode blocks and evaluates ``max_k ||(i*tau - B_k)^{-1}||``.

    Mode inclusion at frequency ``tau``: every mode with
    ``xi_k <= CUTOFF_FACTOR * tau^2 / m_1`` plus the first ``FIRST_MODES_FLOOR``
    modes.  The first excluded mode is also evaluated when available and its
    norm is reported as a margin check on the cutoff.
    """

    def __init__(
        self,
        params: ModelParams,
        kernel: ExponentialKernel,
        grid: ModeGrid,
        M: int,
        threads: int = 1,
    ) -> None:
        self.params = params
        self.kernel = kernel
        self.grid = grid
        self.lag = laguerre_grid(M, kernel.delta)
        self.threads = max(1, int(threads))
        self._m1 = AsymptoticConstants.from_params(params).m1
        self._blocks: dict[int, ModeBlock] = {}
        self._xi = grid.xi

    def block(self, k: int) -> ModeBlock:
        blk = self._blocks.get(k)
        if blk is None:
            blk = mode_block(k, self.params, self.kernel, self.lag, self.grid)
            self._blocks[k] = blk
        return blk

    def included_modes(self, tau: float) -> list[int]:
        cutoff = CUTOFF_FACTOR * tau * tau / self._m1
        n_cut = int(np.searchsorted(self._xi, cutoff, side="right"))
        return list(range(1, min(self.grid.count, max(n_cut, FIRST_MODES_FLOOR)) + 1))

    def norm_at(self, tau: float) -> tuple[float, int, int, float | None]:
        """Return ``(norm, argmax mode, cutoff mode, margin)``.

        ``margin`` is included-max divided by the first excluded mode's norm,
        or None when the grid is exhausted.
        """
        ks = self.included_modes(tau)

        def one(k: int) -> float:
            return self.block(k).resolvent_norm(tau)

        if self.threads > 1 and len(ks) > 8:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                norms = list(pool.map(one, ks))
        else:
            norms = [one(k) for k in ks]
        i_best = int(np.argmax(norms))
        best = norms[i_best]
        margin = None
        k_next = ks[-1] + 1
        if k_next <= self.grid.count:
            margin = best / one(k_next)
        return best, ks[i_best], ks[-1], margin

    def spectrum_distances(self, tau: float) -> float:
        """Distance from ``i*tau`` to the union of included blocks' spectra."""
        dist = math.inf
        for k in self.included_modes(tau):
            ev = self.block(k).eigenvalues()
            dist = min(dist, float(np.min(np.abs(ev - 1j * tau))))
        return dist


def resolvent_norm(
    tau: float,
    params: ModelParams,
    kernel: ExponentialKernel,
    grid: ModeGrid,
    M: int,
    threads: int = 1,
) -> float:
    """One-shot evaluation of the sweep maximand at frequency ``tau``."""
    return ResolventSweeper(params, kernel, grid, M, threads).norm_at(tau)[0]


@dataclass(frozen=True)
class SweepResult:
    """Samples of the scaled resolvent norm ``|tau|^(-omega) * norm(tau)``.

    ``resonance_branch`` tags each sample with the oscillatory branch whose
    computed imaginary part produced it (0 for plain log-grid samples).
    """

    omega: float
    M: int
    taus: np.ndarray
    norms: np.ndarray
    scaled: np.ndarray
    argmax_modes: np.ndarray
    cutoffs: np.ndarray
    resonance_branch: np.ndarray
    margins: tuple[float | None, ...]

    def __post_init__(self) -> None:
        for name in ("taus", "norms", "scaled"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def resonance_mask(self) -> np.ndarray:
        return self.resonance_branch > 0

    @property
    def sup_scaled(self) -> float:
        return float(self.scaled.max())

    @property
    def argmax_tau(self) -> float:
        return float(self.taus[int(np.argmax(self.scaled))])

    @property
    def sup_at_resonance(self) -> bool:
        return bool(self.resonance_branch[int(np.argmax(self.scaled))] > 0)

    def rescaled(self, omega: float) -> "SweepResult":
        """Same samples under a different scaling exponent (no recompute)."""
        return SweepResult(
            omega=omega,
            M=self.M,
            taus=self.taus.copy(),
            norms=self.norms.copy(),
            scaled=np.abs(self.taus) ** (-omega) * self.norms,
            argmax_modes=self.argmax_modes,
            cutoffs=self.cutoffs,
            resonance_branch=self.resonance_branch,
            margins=self.margins,
        )


def resonance_frequencies(
    params: ModelParams,
    delta: float,
    grid: ModeGrid,
    tau_lo: float,
    tau_hi: float,
    per_branch: int = 16,
) -> tuple[np.ndarray, np.ndarray]:
    """Imaginary parts of computed oscillatory roots inside the window,
    subsampled log-uniformly in mode index, with their branch tags."""
    c = AsymptoticConstants.from_params(params)
    taus: list[float] = []
    tags: list[int] = []
    xi = grid.xi
    for j, m in ((1, c.m1), (2, c.m2)):
        lo = int(np.searchsorted(xi, tau_lo**2 / m, side="left")) + 1
        hi = int(np.searchsorted(xi, tau_hi**2 / m, side="right"))
        if hi < lo or per_branch == 0:
            continue
        ks = np.unique(np.geomspace(lo, hi, per_branch).astype(int))
        for k in ks:
            if not 1 <= k <= grid.count:
                continue
            branch = quintic_roots(quintic_coeffs(int(k), params, delta, grid), params)
            im = branch.lam(j, +1).imag
            if tau_lo <= im <= tau_hi:
                taus.append(im)
                tags.append(j)
    order = np.argsort(taus)
    return np.asarray(taus)[order], np.asarray(tags, dtype=int)[order]


def scaled_sweep(
    params: ModelParams,
    kernel: ExponentialKernel,
    grid: ModeGrid,
    M: int,
    tau_lo: float,
    tau_hi: float,
    omega: float | None = None,
    per_decade: int = 64,
    resonances_per_branch: int = 16,
    threads: int = 1,
) -> SweepResult:
    """Sample ``|tau|^(-omega) * resolvent_norm(tau)`` on a log grid plus
    near-resonance frequencies.  Default ``omega = 2 - 2a``."""
    if omega is None:
        omega = 2.0 - 2.0 * params.a
    n_grid = max(2, int(round(per_decade * math.log10(tau_hi / tau_lo))))
    base = np.geomspace(tau_lo, tau_hi, n_grid)
    reso, tags = resonance_frequencies(
        params, kernel.delta, grid, tau_lo, tau_hi, per_branch=resonances_per_branch
    )
    taus = np.concatenate([base, reso])
    branch_tag = np.concatenate([np.zeros(base.size, dtype=int), tags])
    order = np.argsort(taus)
    taus = taus[order]
    branch_tag = branch_tag[order]

    sweeper = ResolventSweeper(params, kernel, grid, M, threads)
    norms = np.empty(taus.size)
    argmax = np.empty(taus.size, dtype=int)
    cutoffs = np.empty(taus.size, dtype=int)
    margins: list[float | None] = []
    for i, tau in enumerate(taus):
        norms[i], argmax[i], cutoffs[i], margin = sweeper.norm_at(float(tau))
        margins.append(margin)
    scaled = np.abs(taus) ** (-omega) * norms
    return SweepResult(
        omega=omega,
        M=M,
        taus=taus,
        norms=norms,
        scaled=scaled,
        argmax_modes=argmax,
        cutoffs=cutoffs,
        resonance_branch=branch_tag,
        margins=tuple(margins),
    )


# ---------------------------------------------------------------------------
# static solve at lam = 0
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModalForcing:
    """Right-hand side of one mode: ``(f1, f2, z1, z2, nu)`` with the history
    component given in sqrt(weight) coordinates."""

    k: int
    f1: complex
    f2: complex
    z1: complex
    z2: complex
    nu_w: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.nu_w, dtype=complex)
        arr.setflags(write=False)
        object.__setattr__(self, "nu_w", arr)


@dataclass(frozen=True)
class StaticSolution:
    k: int
    v: complex
    u: complex
    p: complex
    q: complex
    eta_w: np.ndarray
    residual: float
    stability_ratio: float


def _h_norm_sq(
    gvp: np.ndarray, params: ModelParams, vp: np.ndarray, u: complex, q: complex, mem_w: np.ndarray
) -> float:
    quad = float((vp.conj() @ gvp @ vp).real)
    return quad + params.rho * abs(u) ** 2 + params.mu * abs(q) ** 2 + float(
        np.sum(np.abs(mem_w) ** 2)
    )


def static_solve(
    forcing: ModalForcing,
    params: ModelParams,
    kernel: ExponentialKernel,
    lag: LaguerreGrid,
    grid: ModeGrid,
    integration_w: np.ndarray | None = None,
) -> StaticSolution:
    """Solve the generator equation ``A W = F`` on one mode.

    The history row integrates directly, ``eta(s) = int_0^s (f1 - nu)``; the
    remaining unknowns collapse to ``beta*xi*(gamma*v - p) = mu*z2`` and
    ``(alpha1*xi - zeta*xi^a)*v = -(rho*f2 + gamma*mu*z2 + xi^a*int g eta)``.
    The result is verified by applying the generator back; the returned
    ``residual`` is relative to the forcing norm and ``stability_ratio`` is
    ``||W|| / ||F||``.
    """
    xi = grid.xi_of(forcing.k)
    zeta = kernel.zeta
    a = params.a
    sw = lag.sqrt_weights
    half_a = xi ** (a / 2.0)
    if integration_w is None:
        integration_w = weighted_integration_matrix(lag)

    # history component in weighted coordinates: eta~ = xi^(a/2) sqrt(w) eta
    eta_w = forcing.f1 * half_a * sw * lag.nodes - integration_w @ forcing.nu_w
    mem_integral = half_a * np.sum(sw * eta_w)  # = xi^a * sum w_m eta_m

    denom = params.alpha1 * xi - zeta * xi**a
    if denom <= 0.0:
        raise InvalidModelError(
            f"static solve needs alpha1*xi - zeta*xi^a > 0; mode k={forcing.k} gives {denom:.6g}"
        )
    v = -(params.rho * forcing.f2 + params.gamma * params.mu * forcing.z2 + mem_integral) / denom
    p = params.gamma * v - params.mu * forcing.z2 / (params.beta * xi)
    u = forcing.f1
    q = forcing.z1

    # apply the generator back, all in weighted coordinates
    r_v = u - forcing.f1
    r_u = (
        -params.alpha * xi * v
        + params.gamma * params.beta * xi * p
        + zeta * xi**a * v
        - mem_integral
    ) / params.rho - forcing.f2
    r_p = q - forcing.z1
    r_q = (-params.beta * xi * p + params.gamma * params.beta * xi * v) / params.mu - forcing.z2
    r_eta = half_a * sw * u - lag.diff_w @ eta_w - forcing.nu_w

    gvp = stiffness_weight(xi, params, zeta)
    n_forcing = math.sqrt(
        _h_norm_sq(gvp, params, np.array([forcing.f1, forcing.z1]), forcing.f2, forcing.z2, forcing.nu_w)
    )
    n_solution = math.sqrt(_h_norm_sq(gvp, params, np.array([v, p]), u, q, eta_w))
    n_residual = math.sqrt(_h_norm_sq(gvp, params, np.array([r_v, r_p]), r_u, r_q, r_eta))
    if n_forcing == 0.0:
        return StaticSolution(forcing.k, 0.0, 0.0, 0.0, 0.0, np.zeros(lag.M, dtype=complex), 0.0, 0.0)
    return StaticSolution(
        forcing.k, v, u, p, q, eta_w, n_residual / n_forcing, n_solution / n_forcing
    )


__all__ = [
    "CUTOFF_FACTOR",
    "FIRST_MODES_FLOOR",
    "LaguerreGrid",
    "ModalForcing",
    "ModeBlock",
    "ResolventSweeper",
    "SingularBlockError",
    "StaticSolution",
    "SweepResult",
    "laguerre_grid",
    "mode_block",
    "resolvent_norm",
    "resonance_frequencies",
    "scaled_sweep",
    "static_solve",
    "stiffness_weight",
    "weighted_integration_matrix",
]
