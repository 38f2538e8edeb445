"""Time propagation, decay measurement, and the history-to-flux equivalence.

Per-mode propagators are dense matrix exponentials: an eigendecomposition is
used when the eigenvector basis is well conditioned, otherwise the
scaling-and-squaring routine takes over.  All decay statements are made on
the n <= N_max truncation; block diagonality makes the truncated operator
norm equal to the max over modes, so ``semiuniform_series`` is exact there.

For a one-term exponential kernel the auxiliary prony state y of a memory
mode maps linearly onto the relaxed-flux variable, flux = -varpi*omega*y.
That map matches energies exactly and intertwines the two generators, which
is the modal realization of the known equivalence between the memory law
with exponential kernel and the relaxed flux law.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels as kmod
from . import modal as modal_mod
from . import model as mmod
from .errors import (DomainError, FitError, NumericError, SpecError,
                     SpectralPointError, UnsupportedMapError)

__all__ = [
    "ModalState",
    "Trajectory",
    "DecayFit",
    "LimitRow",
    "propagate",
    "semiuniform_norm",
    "semiuniform_series",
    "decay_fit",
    "mc_twin",
    "lambda_map",
    "lambda_lift",
    "singular_limit",
]

EIG_COND_LIMIT = 1e8


@dataclass(frozen=True)
class ModalState:
    n: int
    vec: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    n: int
    t: np.ndarray
    states: np.ndarray   # (T, dim)
    energy: np.ndarray   # (T,)


@dataclass(frozen=True)
class DecayFit:
    kind: str        # "exponential" | "algebraic"
    rate: float      # decay rate omega (exponential) or log-log slope (algebraic)
    constant: float
    residual: float  # max abs deviation in log space
    window: tuple


@dataclass(frozen=True)
class LimitRow:
    eps: float
    chi_g: float
    chi_h: float     # None for straight-beam models
    target_g: float
    target_h: float
    gap_g: float
    gap_h: float


def _propagator(mode):
    """exp(t G) evaluator; eigendecomposition with a conditioning guard."""
    G = mode.generator
    lam, V = np.linalg.eig(G)
    cond = np.linalg.cond(V)
    if np.isfinite(cond) and cond < EIG_COND_LIMIT:
        Vi = np.linalg.inv(V)

        def U(t):
            return (V * np.exp(lam * t)) @ Vi
    else:
        def U(t):
            return scipy.linalg.expm(G * t)
    return U


def propagate(mode, u0, ts):
    """Trajectory exp(t G) u0 with the per-step energy (1/2)||u||_W^2."""
    if isinstance(u0, ModalState):
        if u0.n != mode.n:
            raise DomainError(f"state is for mode {u0.n}, system is mode {mode.n}")
        u0 = u0.vec
    u0 = np.asarray(u0, dtype=complex)
    if u0.shape != (mode.dim,):
        raise DomainError(f"state has shape {u0.shape}, mode dimension is {mode.dim}")
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0) or np.any(np.diff(ts) < 0):
        raise DomainError("time grid must be nondecreasing and nonnegative")
    U = _propagator(mode)
    states = np.empty((ts.size, mode.dim), dtype=complex)
    energy = np.empty(ts.size)
    W = mode.weight
    for j, t in enumerate(ts):
        u = U(t) @ u0 if t > 0 else u0.copy()
        if not np.all(np.isfinite(u)):
            raise NumericError(f"non-finite state at mode n={mode.n}, t={t}")
        states[j] = u
        energy[j] = 0.5 * float(np.real(np.conj(u) @ (W @ u)))
    return Trajectory(n=mode.n, t=ts.copy(), states=states, energy=energy)


def semiuniform_series(spec, ts, n_max, grid=None):
    """sup_{n <= n_max} ||exp(t G_n) G_n^{-1}||_{W_n} on a time grid.

    Exact per-mode weighted operator norms; the truncation level must be
    reported with any decay claim derived from this.
    """
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0):
        raise DomainError("times must be nonnegative")
    vals = np.zeros(ts.size)
    eye_cache = {}
    for n in range(1, n_max + 1):
        mode = modal_mod.assemble(spec, n, grid=grid)
        G, W = mode.generator, mode.weight
        d = mode.dim
        eye = eye_cache.setdefault(d, np.eye(d))
        Wh, Whi = modal_mod.weight_sqrt(W)
        try:
            Ginv = np.linalg.solve(G, eye.astype(complex))
        except np.linalg.LinAlgError:
            raise SpectralPointError(f"0 is in the spectrum of mode {n}",
                                     lam=0.0, n=n) from None
        lam, V = np.linalg.eig(G)
        cond = np.linalg.cond(V)
        if np.isfinite(cond) and cond < EIG_COND_LIMIT:
            L = Wh @ V
            R = np.linalg.solve(V, Ginv @ Whi)
            for j, t in enumerate(ts):
                M = (L * np.exp(lam * t)) @ R
                vals[j] = max(vals[j], np.linalg.svd(M, compute_uv=False)[0])
        else:
            for j, t in enumerate(ts):
                M = Wh @ (scipy.linalg.expm(G * t) @ (Ginv @ Whi))
                vals[j] = max(vals[j], np.linalg.svd(M, compute_uv=False)[0])
    if not np.all(np.isfinite(vals)):
        raise NumericError("semiuniform norm overflowed")
    return vals


def semiuniform_norm(spec, t, n_max, grid=None):
    return float(semiuniform_series(spec, [t], n_max, grid=grid)[0])


def decay_fit(ts, values, kind):
    """Least-squares decay fit.

    exponential: log v ~ log C - rate * t      (rate reported positive)
    algebraic:   log v ~ log C + rate * log t  (rate is the slope)
    """
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        raise DomainError("decay fit needs strictly positive values")
    if ts.size < 8:
        raise FitError(f"decay fit needs at least 8 points, got {ts.size}")
    y = np.log(values)
    if kind == "exponential":
        x = ts
    elif kind == "algebraic":
        if np.any(ts <= 0):
            raise DomainError("algebraic fit needs strictly positive times")
        x = np.log(ts)
    else:
        raise DomainError(f"unknown fit kind {kind!r}")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(np.max(np.abs(A @ np.array([slope, intercept]) - y)))
    rate = -slope if kind == "exponential" else slope
    return DecayFit(kind=kind, rate=float(rate), constant=float(np.exp(intercept)),
                    residual=residual, window=(float(ts[0]), float(ts[-1])))


def _exp_kernel_params(kernel, varpi, name):
    """(relaxation time, prony term) of a one-term exponential kernel."""
    if kernel is None or kernel.kind != "prony" or len(kernel.terms) != 1:
        raise UnsupportedMapError(
            f"{name} must be a one-term exponential kernel for the flux map")
    a, th = kernel.terms[0]
    if abs(a * th**2 - 1.0) > 1e-10:
        raise UnsupportedMapError(f"{name} must have unit total g-mass")
    return th / varpi


def mc_twin(spec):
    """The relaxed-flux system matching a memory system with exponential
    kernels: sigma = theta_g / varpi (and tau likewise)."""
    c = spec.coeffs
    if spec.model == "BGP":
        sigma = _exp_kernel_params(spec.kernel_g, c.varpi, "kernel_g")
        tau = _exp_kernel_params(spec.kernel_h, c.varpi, "kernel_h")
        coeffs = mmod.BeamCoefficients(
            rho1=c.rho1, rho2=c.rho2, rho3=c.rho3, k=c.k, k0=c.k0, b=c.b,
            varpi=c.varpi, gamma=c.gamma, l=c.l, ell=c.ell, sigma=sigma, tau=tau)
        return mmod.SystemSpec(model="BMC", coeffs=coeffs)
    if spec.model == "TGP":
        sigma = _exp_kernel_params(spec.kernel_g, c.varpi, "kernel_g")
        coeffs = mmod.BeamCoefficients(
            rho1=c.rho1, rho2=c.rho2, rho3=c.rho3, k=c.k, k0=c.k0, b=c.b,
            varpi=c.varpi, gamma=c.gamma, l=c.l, ell=c.ell, sigma=sigma, tau=c.tau)
        return mmod.SystemSpec(model="TMC", coeffs=coeffs)
    raise UnsupportedMapError("the flux map applies to memory-law systems only")


def _check_prony_mode_layout(spec):
    labels, blocks, scheme = modal_mod._layout(spec, None)
    if scheme != "prony-reduction" or any(b.size != 1 for b in blocks):
        raise UnsupportedMapError(
            "flux map needs one-term prony memory states (prony-reduction)")
    return labels, blocks


def lambda_map(state, spec):
    """Map a memory-mode state (exponential kernel, prony form) to the state
    of the matching relaxed-flux system: flux = -varpi * omega * y.

    The shared components are untouched; energies agree exactly, so the map
    is an isometry between the reduced mode spaces.
    """
    if not isinstance(state, ModalState):
        raise DomainError("lambda_map expects a ModalState")
    mc_twin(spec)  # validates the kernels
    _, blocks = _check_prony_mode_layout(spec)
    om = modal_mod.omega(spec.coeffs.ell, state.n)
    vec = np.asarray(state.vec, dtype=complex).copy()
    for blk in blocks:
        vec[blk.start] = -spec.coeffs.varpi * om * vec[blk.start]
    return ModalState(n=state.n, vec=vec)


def lambda_lift(state, spec):
    """Inverse of ``lambda_map``: y = -flux / (varpi * omega).

    Realizes the canonical history lift of a flux datum (the linear-in-s
    history whose flux image is the datum itself).
    """
    if not isinstance(state, ModalState):
        raise DomainError("lambda_lift expects a ModalState")
    mc_twin(spec)
    _, blocks = _check_prony_mode_layout(spec)
    om = modal_mod.omega(spec.coeffs.ell, state.n)
    vec = np.asarray(state.vec, dtype=complex).copy()
    for blk in blocks:
        vec[blk.start] = -vec[blk.start] / (spec.coeffs.varpi * om)
    return ModalState(n=state.n, vec=vec)


def singular_limit(spec, eps_list, m=None):
    """Stability numbers along the Dirac rescaling (or parabolic mixture).

    Reports, per eps, the rescaled chi values and their gaps to the
    classical-law limits -(rho1/k) chi0 and -(rho1/k) chi1.
    """
    if spec.model not in mmod.MEMORY_MODELS:
        raise SpecError("singular limit sweeps apply to memory-law systems")
    c = spec.coeffs
    base = mmod.stability_numbers(spec)
    target_g = -(c.rho1 / c.k) * base.chi0
    target_h = -(c.rho1 / c.k) * base.chi1 if spec.model == "BGP" else None

    def transformed(kernel, eps):
        if m is None:
            return kmod.rescaled(kernel, eps)
        return kmod.cg_mix(kernel, eps, m)

    rows = []
    for eps in eps_list:
        # chi arithmetic works directly off the transformed masses; the
        # intermediates are legitimately non-normalized objects
        g0 = kmod.masses(transformed(spec.kernel_g, eps)).g0
        chi_g, _ = mmod._chi_memory(c, c.varpi * g0, base.chi0)
        chi_h = gap_h = None
        if spec.model == "BGP":
            h0 = kmod.masses(transformed(spec.kernel_h, eps)).g0
            chi_h, _ = mmod._chi_memory(c, c.varpi * h0, base.chi1)
            gap_h = abs(chi_h - target_h)
        rows.append(LimitRow(eps=float(eps), chi_g=float(chi_g), chi_h=chi_h,
                             target_g=float(target_g), target_h=target_h,
                             gap_g=float(abs(chi_g - target_g)), gap_h=gap_h))
    return rows
