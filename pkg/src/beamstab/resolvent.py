"""Resolvent norms on the imaginary axis and the sharp lower-bound sequence.

The truncated operator is block diagonal over modes, so its weighted
resolvent norm at i*lambda is the max over modes of the per-mode norms
||(i lam - G_n)^{-1}||_{W_n}, each computed as the largest singular value of
W^{1/2} (i lam - G_n)^{-1} W^{-1/2}.

Resonance peaks of the polynomially stable models are extremely narrow (their
width shrinks like lam^{-2}), so a blind lambda grid reads only the O(1)
inter-peak floor.  ``sweep`` therefore treats each grid point as a bin of the
log axis and, inside the bin, also evaluates at the imaginary parts of the
least-damped eigenvalues of the active modes, reporting the achieved
(lambda, sup) pair.  With ``peak_refine=False`` it degenerates to the plain
fixed-lambda evaluation.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels as kmod
from . import modal as modal_mod
from . import model as mmod
from .errors import (DomainError, FitError, InfeasibleError, SingularWeightError,
                     SpecError, SpectralPointError)

__all__ = [
    "ResolventSample",
    "GrowthFit",
    "LowerBoundRow",
    "LowerBoundSequence",
    "DetCheck",
    "SpectralAbscissa",
    "mode_resolvent_norm",
    "sweep",
    "fit_growth",
    "mn_matrix",
    "lower_bound",
    "det_check",
    "spectral_abscissa",
]

WINDOW_FACTOR = 4.0
CRAMER_TOL = 1e-8


@dataclass(frozen=True)
class ResolventSample:
    lam: float
    value: float
    argmax_n: int


@dataclass(frozen=True)
class GrowthFit:
    exponent: float
    intercept: float
    residual: float
    count: int


@dataclass(frozen=True)
class LowerBoundRow:
    n: int
    omega: float
    lam: float
    muhat: complex
    nuhat: complex
    det_m: complex
    det_a: complex
    amp: float          # |A_n| from the direct solve
    amp_cramer: float   # |det A_n / det M_n|
    ratio: float        # |A_n| / lam_n


@dataclass(frozen=True)
class LowerBoundSequence:
    model: str
    c0: float
    beta0: float
    cstar: float
    forcing_norm: float
    rows: tuple
    notes: tuple


@dataclass(frozen=True)
class DetCheck:
    n: int
    lam: float
    det_m: complex
    det_m_predicted: complex
    gap_m: float
    det_a: complex
    det_a_predicted: complex
    gap_a: float
    tol_hint: float


@dataclass(frozen=True)
class SpectralAbscissa:
    ns: np.ndarray
    per_mode: np.ndarray
    global_max: float
    argmax_n: int


def _weight_factors(W):
    """Batched Hermitian square roots of stacked weight matrices."""
    ew, V = np.linalg.eigh(W)
    if np.any(ew[:, 0] <= 1e-12 * ew[:, -1]):
        raise SingularWeightError("a mode weight matrix is numerically singular")
    sq = np.sqrt(ew)
    Vt = np.swapaxes(V, 1, 2)
    Wh = (V * sq[:, None, :]) @ Vt
    Whi = (V / sq[:, None, :]) @ Vt
    return Wh, Whi


def _batched_norms(G, Wh, Whi, lam):
    """||(i lam - G)^{-1}|| in the weighted norm, per stacked mode.

    ``lam`` may be a scalar or one value per mode.
    """
    N, d, _ = G.shape
    lam_arr = np.broadcast_to(np.asarray(lam, dtype=float), (N,))
    A = 1j * lam_arr[:, None, None] * np.eye(d) - G
    try:
        X = np.linalg.solve(A, Whi.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise SpectralPointError(f"i*lambda lies in a mode spectrum: {exc}") from None
    return np.linalg.svd(Wh @ X, compute_uv=False)[:, 0]


def mode_resolvent_norm(mode, lam):
    """Weighted resolvent norm of a single mode at i*lam."""
    Wh, Whi = _weight_factors(mode.weight[None])
    try:
        val = _batched_norms(mode.generator[None], Wh, Whi, float(lam))[0]
    except SpectralPointError:
        ev = np.linalg.eigvals(mode.generator)
        hit = ev[np.argmin(np.abs(ev - 1j * lam))]
        raise SpectralPointError(
            f"i*{lam} is a spectral point of mode {mode.n}",
            lam=lam, n=mode.n, eigenvalue=hit) from None
    if not np.isfinite(val):
        raise SpectralPointError(f"resolvent norm overflow at lambda={lam}",
                                 lam=lam, n=mode.n)
    return float(val)


def _window_modes(spec, lam, n_max):
    """Active mode window: omega_n within WINDOW_FACTOR of lam sqrt(rho1/k),
    always joined with the base range 1..n_max."""
    c = spec.coeffs
    base = np.arange(1, n_max + 1)
    if lam <= 0:
        return base
    center = lam * np.sqrt(c.rho1 / c.k) * c.ell / np.pi
    lo = max(1, int(np.floor(center / WINDOW_FACTOR)))
    hi = int(np.ceil(center * WINDOW_FACTOR))
    return np.unique(np.concatenate([base, np.arange(lo, hi + 1)]))


def _sweep_point(spec, lam, bin_lo, bin_hi, n_max, grid, peak_refine, full_range):
    if full_range:
        c = spec.coeffs
        hi = int(np.ceil(WINDOW_FACTOR * lam * np.sqrt(c.rho1 / c.k) * c.ell / np.pi))
        ns = np.arange(1, max(n_max, hi) + 1)
    else:
        ns = _window_modes(spec, lam, n_max)
    G, W, *_ = modal_mod._mode_arrays(spec, ns, grid=grid)
    Wh, Whi = _weight_factors(W)

    vals = _batched_norms(G, Wh, Whi, lam)
    best = int(np.argmax(vals))
    best_val, best_lam, best_n = float(vals[best]), float(lam), int(ns[best])

    if peak_refine and lam > 0:
        ev = np.linalg.eigvals(G)
        im = ev.imag
        re = ev.real
        in_bin = (im > bin_lo) & (im <= bin_hi)
        re_masked = np.where(in_bin, re, -np.inf)
        pick = np.argmax(re_masked, axis=1)
        rows = np.arange(len(ns))
        cand_lam = im[rows, pick]
        has = np.isfinite(re_masked[rows, pick])
        if np.any(has):
            sub = rows[has]
            cvals = _batched_norms(G[sub], Wh[sub], Whi[sub], cand_lam[sub])
            j = int(np.argmax(cvals))
            if cvals[j] > best_val:
                best_val = float(cvals[j])
                best_lam = float(cand_lam[sub][j])
                best_n = int(ns[sub][j])
        if best_lam != lam:
            # certify the sup over all candidate modes at the achieved lambda
            vals2 = _batched_norms(G, Wh, Whi, best_lam)
            b2 = int(np.argmax(vals2))
            best_val, best_n = float(vals2[b2]), int(ns[b2])
    return ResolventSample(lam=best_lam, value=best_val, argmax_n=best_n)


def sweep(spec, lam_grid, n_max, grid=None, peak_refine=True, full_range=False,
          threads=None):
    """Resolvent samples sup_n ||(i lam - G_n)^{-1}||_W over a lambda grid.

    The grid is treated as bins on the log axis; within each bin the sample
    may move to a resonance (see module docstring).  Raises with (lambda, n)
    context when a sample hits the spectrum exactly.
    """
    lam_grid = np.asarray(lam_grid, dtype=float)
    if np.any(lam_grid < 0):
        raise DomainError("lambda grid must be nonnegative")
    pos = lam_grid[lam_grid > 0]
    edges = {}
    if pos.size >= 2:
        logs = np.log(pos)
        mids = 0.5 * (logs[1:] + logs[:-1])
        lo = np.concatenate([[2 * logs[0] - mids[0]], mids])
        hi = np.concatenate([mids, [2 * logs[-1] - mids[-1]]])
        edges = {p: (np.exp(a), np.exp(b)) for p, a, b in zip(pos, lo, hi)}

    def run(lam):
        blo, bhi = edges.get(lam, (lam, lam))
        try:
            return _sweep_point(spec, lam, blo, bhi, n_max, grid,
                                peak_refine, full_range)
        except SpectralPointError as exc:
            exc.lam = lam
            raise

    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, lam_grid))
    return [run(lam) for lam in lam_grid]


def fit_growth(samples, window=None):
    """Least squares of log(value) against log(lambda) over a sample window."""
    pts = [(s.lam, s.value) for s in samples
           if s.lam > 0 and (window is None or window[0] <= s.lam <= window[1])]
    if len(pts) < 8:
        raise FitError(f"growth fit needs at least 8 samples, got {len(pts)}")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(np.max(np.abs(A @ np.array([slope, intercept]) - y)))
    return GrowthFit(exponent=float(slope), intercept=float(intercept),
                     residual=residual, count=len(pts))


def _effective_kernels(spec):
    """Kernels entering the modal coefficient matrix; relaxed-flux tags map to
    their exponential-kernel equivalents."""
    c = spec.coeffs
    if spec.model in mmod.MEMORY_MODELS:
        return spec.kernel_g, spec.kernel_h
    if spec.model in mmod.RELAXED_MODELS:
        kg = kmod.exponential_kernel(c.varpi, c.sigma)
        kh = kmod.exponential_kernel(c.varpi, c.tau) if spec.model == "BMC" else None
        return kg, kh
    raise SpecError(f"the modal coefficient matrix is not defined for {spec.model}")


def mn_matrix(spec, n, lam):
    """Modal coefficient matrix of the eliminated resolvent system.

    5x5 for the curved-beam tags, 3x3 for the straight-beam tags; the heat
    rows carry the half-line Fourier transform of the kernel at lam.
    """
    c = spec.coeffs
    kg, kh = _effective_kernels(spec)
    om = modal_mod.omega(c.ell, n)
    muhat = kmod.fourier_mu(kg, lam)
    g0 = kmod.masses(kg).g0
    lam2 = lam * lam
    if spec.is_bresse:
        l = c.l
        nuhat = kmod.fourier_mu(kh, lam)
        h0 = kmod.masses(kh).g0
        p1 = -c.rho1 * lam2 + c.k * om**2 + l * l * c.k0
        p2 = -c.rho2 * lam2 + c.b * om**2 + c.k
        p3 = -c.rho1 * lam2 + c.k0 * om**2 + l * l * c.k
        p4 = -c.rho3 * lam2 + c.varpi * g0 * om**2
        p5 = -c.rho3 * lam2 + c.varpi * h0 * om**2
        return np.array([
            [p1, c.k * om, l * om * (c.k + c.k0), 0.0, l * c.gamma],
            [c.k * om, p2, c.k * l, c.gamma * om, 0.0],
            [l * om * (c.k + c.k0), c.k * l, p3, 0.0, c.gamma * om],
            [0.0, lam2 * om * c.gamma, 0.0, p4 - c.varpi * om**2 * muhat, 0.0],
            [lam2 * c.gamma * l, 0.0, lam2 * om * c.gamma, 0.0,
             p5 - c.varpi * om**2 * nuhat],
        ], dtype=complex)
    r1 = -c.rho1 * lam2 + c.k * om**2
    r2 = -c.rho2 * lam2 + c.b * om**2 + c.k
    r3 = -c.rho3 * lam2 + c.varpi * g0 * om**2
    return np.array([
        [r1, c.k * om, 0.0],
        [c.k * om, r2, c.gamma * om],
        [0.0, lam2 * om * c.gamma, r3 - c.varpi * om**2 * muhat],
    ], dtype=complex)


def _construction_constants(spec):
    """(c0, beta0, cstar, masses) of the lower-bound construction."""
    c = spec.coeffs
    report = mmod.stability_numbers(spec)
    for name, value, scale in mmod.governing_factors(report, spec.model):
        if abs(value) <= report.tol * scale:
            raise InfeasibleError(
                f"lower-bound construction undefined: {name} vanishes")
    kg, kh = _effective_kernels(spec)
    mg = kmod.masses(kg)
    g0, mu0 = mg.g0, mg.mu0
    if spec.is_bresse:
        mh = kmod.masses(kh)
        h0, nu0 = mh.g0, mh.mu0
        chi_g = report.chi_g if report.chi_g is not None else report.chi_sigma
        chi_h = report.chi_h if report.chi_h is not None else report.chi_tau
        sg, sh = report.sigma_g, report.sigma_h
        l = c.l
        c0 = -(1.0 / (chi_g * chi_h)) * (c.rho1 / (c.varpi * c.k)) / (g0 * h0) * (
            chi_h * sg * c.k**2 * h0
            + (chi_g / c.rho1)
            * (sh * c.rho1 * (c.k + c.k0) ** 2 - c.gamma**2 * c.k * (3 * c.k + c.k0))
            * l * l * g0)
        beta0 = -(c.gamma**2 * c.k**3 / (c.rho1 * chi_g * chi_h)) * (
            mu0 * h0 * chi_h**2 / g0
            + 4 * l * l * nu0 * g0 * chi_g**2 / h0)
        cstar = (c.k / c.rho1) ** 2 * c.varpi * g0 * h0 * abs(chi_g * chi_h / beta0)
        return c0, beta0, cstar, (g0, mu0, h0, nu0)
    chi_g = report.chi_g if report.chi_g is not None else report.chi_sigma
    sg = report.sigma_g
    c0 = -c.k * c.rho1 * sg / (chi_g * c.varpi * g0)
    beta0 = c.gamma**2 * c.k**2 / (chi_g * c.varpi * g0)
    cstar = (g0 * c.k / (mu0 * c.rho1)) * abs(chi_g / beta0)
    return c0, beta0, cstar, (g0, mu0, None, None)


def _lambda_n(spec, c0, om):
    c = spec.coeffs
    if spec.is_bresse:
        rad = (c.k * om**2 + c.l**2 * c.k0 - c0) / c.rho1
    else:
        rad = (c.k * om**2 - c0) / c.rho1
    return np.sqrt(rad) if rad > 0 else None


def lower_bound(spec, ns):
    """Explicit resonance sequence: lam_n, the eliminated modal solve with
    unit first-row forcing, and the Cramer cross-check of the amplitude.

    The ratio column |A_n|/lam_n approaches the predicted constant cstar.
    """
    c = spec.coeffs
    c0, beta0, cstar, _ = _construction_constants(spec)
    kg, kh = _effective_kernels(spec)
    rows = []
    notes = []
    for n in ns:
        om = modal_mod.omega(c.ell, n)
        lam = _lambda_n(spec, c0, om)
        if lam is None:
            notes.append(f"n={n} skipped: lambda_n^2 <= 0 at this mode")
            continue
        M = mn_matrix(spec, n, lam)
        rhs = np.zeros(M.shape[0], dtype=complex)
        rhs[0] = 1.0
        sol = np.linalg.solve(M, rhs)
        det_m = complex(np.linalg.det(M))
        Ma = M.copy()
        Ma[:, 0] = rhs
        det_a = complex(np.linalg.det(Ma))
        amp = abs(sol[0])
        amp_cramer = abs(det_a / det_m)
        if abs(amp - amp_cramer) > CRAMER_TOL * max(amp, amp_cramer):
            notes.append(
                f"n={n}: Cramer and direct amplitudes disagree by "
                f"{abs(amp - amp_cramer) / max(amp, amp_cramer):.2e} (ill-conditioned)")
        nuhat = kmod.fourier_mu(kh, lam) if kh is not None else complex("nan")
        rows.append(LowerBoundRow(
            n=int(n), omega=float(om), lam=float(lam),
            muhat=kmod.fourier_mu(kg, lam), nuhat=nuhat,
            det_m=det_m, det_a=det_a, amp=float(amp),
            amp_cramer=float(amp_cramer), ratio=float(amp / lam)))
    return LowerBoundSequence(
        model=spec.model, c0=float(c0), beta0=float(beta0), cstar=float(cstar),
        forcing_norm=float(np.sqrt(c.ell / (2 * c.rho1))),
        rows=tuple(rows), notes=tuple(notes))


def det_check(spec, n):
    """Measured vs predicted leading-order determinants at the resonance.

    ``tol_hint`` scales with the kernel's Riemann-Lebesgue defect at lam_n,
    which is where the subleading corrections come from.
    """
    c = spec.coeffs
    c0, beta0, _, (g0, mu0, h0, _nu0) = _construction_constants(spec)
    om = modal_mod.omega(c.ell, n)
    lam = _lambda_n(spec, c0, om)
    if lam is None:
        raise DomainError(f"lambda_n is not real at n={n}")
    M = mn_matrix(spec, n, lam)
    det_m = complex(np.linalg.det(M))
    rhs = np.zeros(M.shape[0], dtype=complex)
    rhs[0] = 1.0
    Ma = M.copy()
    Ma[:, 0] = rhs
    det_a = complex(np.linalg.det(Ma))
    if spec.is_bresse:
        pred_m = -1j * c.varpi * np.sqrt(c.rho1 / c.k) * beta0 * om**7
        report = mmod.stability_numbers(spec)
        chi_g = report.chi_g if report.chi_g is not None else report.chi_sigma
        chi_h = report.chi_h if report.chi_h is not None else report.chi_tau
        pred_a = chi_g * chi_h * (c.varpi * c.k / c.rho1) ** 2 * g0 * h0 * om**8
    else:
        pred_m = -1j * c.varpi * mu0 * np.sqrt(c.rho1 / c.k) * beta0 * om**3
        report = mmod.stability_numbers(spec)
        chi_g = report.chi_g if report.chi_g is not None else report.chi_sigma
        pred_a = -chi_g * (c.varpi * g0 * c.k / c.rho1) * om**4
    kg, kh = _effective_kernels(spec)
    defect = kmod.rl_defect(kg, lam)
    if kh is not None:
        defect = max(defect, kmod.rl_defect(kh, lam))
    return DetCheck(
        n=int(n), lam=float(lam),
        det_m=det_m, det_m_predicted=complex(pred_m),
        gap_m=float(abs(det_m - pred_m) / abs(pred_m)),
        det_a=det_a, det_a_predicted=complex(pred_a),
        gap_a=float(abs(det_a - pred_a) / abs(pred_a)),
        tol_hint=float(10.0 * defect))


def spectral_abscissa(spec, n_max, grid=None, chunk=None):
    """Per-mode max Re of the generator spectrum and the global maximum."""
    ns = np.arange(1, n_max + 1)
    per = np.empty(n_max)
    if chunk is None:
        probe_dim = len(modal_mod._layout(spec, grid)[0])
        chunk = max(1, 2_000_000 // (probe_dim * probe_dim))
    for start in range(0, n_max, chunk):
        sub = ns[start:start + chunk]
        G, *_ = modal_mod._mode_arrays(spec, sub, grid=grid)
        per[start:start + len(sub)] = np.linalg.eigvals(G).real.max(axis=1)
    arg = int(np.argmax(per))
    return SpectralAbscissa(ns=ns, per_mode=per, global_max=float(per[arg]),
                            argmax_n=int(ns[arg]))
