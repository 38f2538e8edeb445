"""Per-mode generators and energy weights.

With the boundary conditions used here (Dirichlet for the deflection and the
temperatures, Neumann for rotation and axial stretch, flux cosine modes) the
trigonometric modes sin/cos(omega_n x), omega_n = n pi / ell, are invariant
under every model's generator, so each Fourier mode closes into a small
complex ODE system du/dt = G_n u.  The associated energy is a Hermitian form
u* W_n u; the factor ell/2 from integrating sin^2/cos^2 is kept inside W_n.

Memory (convolution) laws are realized two ways:

* ``prony-reduction``: one auxiliary state per exponential term,
  y_j = int a_j exp(-s/theta_j) d(s) ds, which closes exactly and is the
  default for prony kernels;
* ``sgrid-upwind``: first-order upwind transport of history samples on a
  geometric grid, the only route for tabulated kernels and an independent
  cross-check for prony ones.

Both carry an exact discrete dissipation identity: the energy decay rate
equals -(varpi/2) times a nonnegative memory functional computed from the
states (see ``dissipation_rate``).
"""

from dataclasses import dataclass

import numpy as np

from . import kernels as kmod
from . import model as mmod
from .errors import AdmissibilityError, DomainError, SingularWeightError, SpecError

__all__ = [
    "MemoryGrid",
    "MemoryBlock",
    "ModeSystem",
    "DissipationInfo",
    "make_grid",
    "grid_tail_mass",
    "omega",
    "assemble",
    "weight_matrix",
    "dissipation_rate",
    "weight_sqrt",
    "matrix_text",
]

GRID_TAIL_REL = 1e-10


@dataclass(frozen=True)
class MemoryGrid:
    """History grid: nodes s_1 < ... < s_M (s_1 > 0) and quadrature weights.

    Weights are chosen so that mu(s_i) * weights_i equals the exact mass of
    the kernel over the cell (s_{i-1}, s_i]; sums against the node values
    then reproduce integrals of the kernel representation exactly.
    """

    s: np.ndarray
    weights: np.ndarray
    s_max: float
    scheme: str = "sgrid-upwind"

    def __post_init__(self):
        if self.s.ndim != 1 or self.s.size < 1:
            raise DomainError("grid needs a 1-d node array")
        if self.s[0] <= 0 or np.any(np.diff(self.s) <= 0):
            raise DomainError("grid nodes must be strictly increasing with s_1 > 0")
        if np.any(self.weights <= 0):
            raise DomainError("grid weights must be positive")

    @property
    def size(self):
        return self.s.size

    @property
    def spacing(self):
        """h_i = s_i - s_{i-1} with the inflow node s_0 = 0."""
        return np.diff(np.concatenate([[0.0], self.s]))


@dataclass(frozen=True)
class MemoryBlock:
    """Where a temperature's memory/flux states live inside a mode vector."""

    temp: str            # label of the owning temperature state
    start: int
    size: int
    scheme: str          # "prony-reduction" | "sgrid-upwind" | "flux" | "none"
    aj: tuple = ()
    thj: tuple = ()
    grid: MemoryGrid = None
    node_mass: np.ndarray = None   # mu_i * weights_i for sgrid


@dataclass(frozen=True)
class ModeSystem:
    """One Fourier mode: du/dt = G u with energy (1/2) u* W u."""

    model: str
    n: int
    omega: float
    generator: np.ndarray
    weight: np.ndarray
    labels: tuple
    scheme: str
    memory: tuple
    varpi: float
    ell: float

    @property
    def dim(self):
        return self.generator.shape[0]

    def index(self, label):
        return self.labels.index(label)


@dataclass(frozen=True)
class DissipationInfo:
    rate: float
    gamma: dict = None        # per-temperature memory functional (GP only)
    identity_gap: float = None
    gamma_form: str = None


def omega(ell, n):
    """Modal frequency n*pi/ell for n >= 1."""
    if n < 1 or int(n) != n:
        raise DomainError(f"mode index must be a positive integer, got {n}")
    return n * np.pi / ell


def grid_tail_mass(kernel, s_max):
    """Exact kernel mass beyond s_max (used to certify truncation)."""
    return kmod.mu_integral(kernel, s_max, np.inf)


def make_grid(kernel, M, policy="geometric"):
    """History grid for a kernel: refined near s = 0, truncated where the
    envelope certifies a relative tail mass below 1e-10.

    A grid may be shared by the two kernels of a curved-beam system; build it
    from the slower-decaying one so the truncation certificate covers both.
    """
    if M < 8:
        raise DomainError("grid needs at least 8 nodes")
    if kernel.delta <= 0:
        raise AdmissibilityError("kernel lacks a positive envelope decay rate")
    m = kmod.masses(kernel)
    if not (m.g0 > 0 and np.isfinite(m.g0)):
        raise AdmissibilityError("kernel mass must be positive and finite")
    s_max = np.log(m.mu0 / (kernel.delta * GRID_TAIL_REL * m.g0)) / kernel.delta
    if policy == "geometric":
        ratio = 1e-4 ** (1.0 - np.arange(1, M + 1) / M)
        s = s_max * ratio
    elif policy == "uniform":
        s = s_max * np.arange(1, M + 1) / M
    else:
        raise DomainError(f"unknown grid policy {policy!r}")
    edges = np.concatenate([[0.0], s])
    cell = np.array([kmod.mu_integral(kernel, a, b) for a, b in zip(edges[:-1], edges[1:])])
    mu_nodes = kmod.mu_at(kernel, s)
    h = np.diff(edges)
    weights = np.where(mu_nodes > 0, cell / np.where(mu_nodes > 0, mu_nodes, 1.0), h)
    s.flags.writeable = False
    weights.flags.writeable = False
    return MemoryGrid(s=s, weights=weights, s_max=float(s_max))


def _memory_scheme(spec, grid):
    if spec.model in mmod.MEMORY_MODELS:
        if grid is not None and grid.scheme == "sgrid-upwind":
            return "sgrid-upwind"
        if spec.kernel_g.kind == "prony" and (
                spec.model != "BGP" or spec.kernel_h.kind == "prony"):
            return "prony-reduction"
        raise SpecError("tabulated kernels need a history grid (make_grid)")
    if spec.model in mmod.RELAXED_MODELS:
        return "flux"
    return "none"


def _layout(spec, grid):
    """Label list and memory blocks for the model."""
    bresse = spec.is_bresse
    scheme = _memory_scheme(spec, grid)

    def mem_labels(tag, size):
        if scheme == "flux":
            return [f"flux_{tag}"]
        return [f"hist_{tag}{i}" for i in range(size)]

    def mem_size(kernel):
        if scheme == "prony-reduction":
            return len(kernel.terms)
        if scheme == "sgrid-upwind":
            return grid.size
        if scheme == "flux":
            return 1
        return 0

    labels = ["defl", "defl_t", "rot", "rot_t"]
    if bresse:
        labels += ["axial", "axial_t"]
    blocks = []
    labels.append("temp_b")
    nb = mem_size(spec.kernel_g)
    start = len(labels)
    if nb:
        labels += mem_labels("b", nb)
        blocks.append(_make_block("temp_b", start, nb, scheme, spec.kernel_g, grid))
    if bresse:
        labels.append("temp_a")
        na = mem_size(spec.kernel_h)
        start = len(labels)
        if na:
            labels += mem_labels("a", na)
            blocks.append(_make_block("temp_a", start, na, scheme, spec.kernel_h, grid))
    return tuple(labels), tuple(blocks), scheme


def _make_block(temp, start, size, scheme, kernel, grid):
    if scheme == "prony-reduction":
        aj = tuple(a for a, _ in kernel.terms)
        thj = tuple(th for _, th in kernel.terms)
        return MemoryBlock(temp=temp, start=start, size=size, scheme=scheme, aj=aj, thj=thj)
    if scheme == "sgrid-upwind":
        # exact per-kernel cell masses: a shared grid may serve two kernels
        if grid_tail_mass(kernel, grid.s_max) > 1e-6 * kmod.masses(kernel).g0:
            raise AdmissibilityError(
                f"history grid truncates too much of the {temp} kernel; "
                "build the grid from the slower-decaying kernel")
        edges = np.concatenate([[0.0], grid.s])
        node_mass = np.array([kmod.mu_integral(kernel, a, b)
                              for a, b in zip(edges[:-1], edges[1:])])
        node_mass.flags.writeable = False
        return MemoryBlock(temp=temp, start=start, size=size, scheme=scheme,
                           grid=grid, node_mass=node_mass)
    return MemoryBlock(temp=temp, start=start, size=size, scheme=scheme)


def _mode_arrays(spec, ns, grid=None, check_condition=True):
    """Stacked (G, W) arrays for the requested mode indices.

    Returns (G complex (N,d,d), W float (N,d,d), labels, blocks, scheme).
    """
    c = spec.coeffs
    ns = np.asarray(ns, dtype=int)
    if np.any(ns < 1):
        raise DomainError("mode indices must be >= 1")
    if check_condition and spec.is_bresse:
        bad = [int(n) for n in ns if abs(c.l * c.ell - n * np.pi) < 1e-9]
        if bad:
            raise SingularWeightError(
                f"energy weight is singular at modes {bad} (l*ell hits a multiple of pi)")
    labels, blocks, scheme = _layout(spec, grid)
    d = len(labels)
    N = ns.size
    om = ns * np.pi / c.ell
    l = spec.effective_l
    bresse = spec.is_bresse

    idx = {name: i for i, name in enumerate(labels)}
    iA, iAt = idx["defl"], idx["defl_t"]
    iR, iRt = idx["rot"], idx["rot_t"]
    iTb = idx["temp_b"]

    G = np.zeros((N, d, d), dtype=complex)
    W = np.zeros((N, d, d), dtype=float)

    G[:, iA, iAt] = 1.0
    G[:, iAt, iA] = -(c.k * om**2 + l * l * c.k0) / c.rho1
    G[:, iAt, iR] = -c.k * om / c.rho1
    G[:, iR, iRt] = 1.0
    G[:, iRt, iA] = -c.k * om / c.rho2
    G[:, iRt, iR] = -(c.b * om**2 + c.k) / c.rho2
    G[:, iRt, iTb] = -c.gamma * om / c.rho2

    if bresse:
        iX, iXt, iTa = idx["axial"], idx["axial_t"], idx["temp_a"]
        G[:, iAt, iX] = -l * om * (c.k + c.k0) / c.rho1
        G[:, iAt, iTa] = -l * c.gamma / c.rho1
        G[:, iRt, iX] = -c.k * l / c.rho2
        G[:, iX, iXt] = 1.0
        G[:, iXt, iA] = -l * om * (c.k + c.k0) / c.rho1
        G[:, iXt, iR] = -c.k * l / c.rho1
        G[:, iXt, iX] = -(c.k0 * om**2 + l * l * c.k) / c.rho1
        G[:, iXt, iTa] = -c.gamma * om / c.rho1

    # temperature rows: elastic coupling
    G[:, iTb, iRt] = c.gamma * om / c.rho3
    if bresse:
        G[:, iTa, iXt] = c.gamma * om / c.rho3
        G[:, iTa, iAt] = c.gamma * l / c.rho3

    # heat law per temperature
    pairs = [(iTb, spec.kernel_g, c.sigma, "temp_b")]
    if bresse:
        pairs.append((idx["temp_a"], spec.kernel_h, c.tau, "temp_a"))
    block_of = {blk.temp: blk for blk in blocks}
    for iT, kernel, relax, temp in pairs:
        if scheme == "none":
            G[:, iT, iT] = -c.varpi * om**2 / c.rho3
            continue
        blk = block_of[temp]
        sl = slice(blk.start, blk.start + blk.size)
        if scheme == "flux":
            iP = blk.start
            G[:, iT, iP] = om / c.rho3
            G[:, iP, iT] = -om / relax
            G[:, iP, iP] = -1.0 / (relax * c.varpi)
        elif scheme == "prony-reduction":
            aj = np.array(blk.aj)
            thj = np.array(blk.thj)
            G[:, iT, sl] = -(c.varpi / c.rho3) * om[:, None] ** 2
            rows = np.arange(blk.start, blk.start + blk.size)
            G[:, rows, rows] = -1.0 / thj
            G[:, sl, iT] = aj * thj
        else:  # sgrid-upwind
            h = blk.grid.spacing
            G[:, iT, sl] = -(c.varpi / c.rho3) * om[:, None] ** 2 * blk.node_mass
            rows = np.arange(blk.start, blk.start + blk.size)
            G[:, rows, rows] = -1.0 / h
            G[:, rows[1:], rows[:-1]] = 1.0 / h[1:]
            G[:, sl, iT] = 1.0

    # energy weight
    v = np.zeros((N, d))
    v[:, iA] = om
    v[:, iR] = 1.0
    if bresse:
        v[:, idx["axial"]] = l
    W += c.k * v[:, :, None] * v[:, None, :]
    if bresse:
        v2 = np.zeros((N, d))
        v2[:, iA] = l
        v2[:, idx["axial"]] = om
        W += c.k0 * v2[:, :, None] * v2[:, None, :]
        W[:, idx["axial_t"], idx["axial_t"]] += c.rho1
        W[:, idx["temp_a"], idx["temp_a"]] += c.rho3
    W[:, iR, iR] += c.b * om**2
    W[:, iAt, iAt] += c.rho1
    W[:, iRt, iRt] += c.rho2
    W[:, iTb, iTb] += c.rho3

    for blk in blocks:
        rows = np.arange(blk.start, blk.start + blk.size)
        if blk.scheme == "flux":
            relax = c.sigma if blk.temp == "temp_b" else c.tau
            W[:, rows, rows] += relax
        elif blk.scheme == "prony-reduction":
            aj, thj = np.array(blk.aj), np.array(blk.thj)
            W[:, rows, rows] += c.varpi * om[:, None] ** 2 / (aj * thj)
        else:
            W[:, rows, rows] += c.varpi * om[:, None] ** 2 * blk.node_mass

    W *= c.ell / 2.0
    return G, W, labels, blocks, scheme


def assemble(spec, n, grid=None):
    """Build the mode-n system; raises SingularWeightError when the energy
    form degenerates (curvature resonance l*ell = n*pi)."""
    G, W, labels, blocks, scheme = _mode_arrays(spec, [n], grid=grid)
    g = G[0]
    w = W[0]
    g.flags.writeable = False
    w.flags.writeable = False
    return ModeSystem(
        model=spec.model, n=int(n), omega=omega(spec.coeffs.ell, n),
        generator=g, weight=w, labels=labels, scheme=scheme, memory=blocks,
        varpi=spec.coeffs.varpi, ell=spec.coeffs.ell)


def weight_matrix(spec, n, grid=None):
    """The energy Gram matrix alone; singularity is reported by the caller's
    eigenanalysis, never raised here."""
    _, W, *_ = _mode_arrays(spec, [n], grid=grid, check_condition=False)
    return W[0]


def weight_sqrt(W, rel_floor=1e-12):
    """Hermitian square root and inverse square root of a weight matrix."""
    ew, V = np.linalg.eigh(W)
    if ew[0] <= rel_floor * ew[-1]:
        raise SingularWeightError(
            f"weight matrix is numerically singular (eig ratio {ew[0] / ew[-1]:.2e})")
    Wh = (V * np.sqrt(ew)) @ V.T
    Whi = (V / np.sqrt(ew)) @ V.T
    return Wh, Whi


def _memory_gamma(mode, blk, u):
    """Discrete memory functional for one temperature.

    Chosen so that the dissipation identity
    Re<Gu, u>_W = -(varpi/2) * sum_over_temperatures Gamma
    holds exactly for the realized scheme.  The prony form is
    (ell/2) sum_j 2 omega^2 |y_j|^2/(a_j theta_j^2); the upwind form is the
    quadrature of -mu' |d|^2 by kernel-mass differences plus the scheme's
    own (nonnegative) numerical dissipation and outflow terms.
    """
    om2 = mode.omega**2
    half_ell = mode.ell / 2.0
    y = u[blk.start:blk.start + blk.size]
    if blk.scheme == "prony-reduction":
        aj, thj = np.array(blk.aj), np.array(blk.thj)
        return half_ell * float(np.sum(2.0 * om2 / (aj * thj**2) * np.abs(y) ** 2))
    if blk.scheme == "sgrid-upwind":
        h = blk.grid.spacing
        w = blk.node_mass / h
        dprev = np.concatenate([[0.0 + 0.0j], y[:-1]])
        jump = np.sum(w * np.abs(y - dprev) ** 2)
        tele = np.sum((w[:-1] - w[1:]) * np.abs(y[:-1]) ** 2) + w[-1] * abs(y[-1]) ** 2
        return half_ell * om2 * float(jump + tele)
    raise DomainError("memory functional is defined for memory-law modes only")


def dissipation_rate(mode, state):
    """Re<G u, u>_W together with the memory functionals for memory modes.

    For prony and upwind memory realizations the identity
    rate = -(varpi/2) (Gamma_b + Gamma_a) is exact up to rounding; the gap is
    reported so callers can assert it.
    """
    u = np.asarray(state, dtype=complex)
    if u.shape != (mode.dim,):
        raise DomainError(f"state has shape {u.shape}, mode dimension is {mode.dim}")
    rate = float(np.real(np.conj(u) @ (mode.weight @ (mode.generator @ u))))
    if mode.scheme not in ("prony-reduction", "sgrid-upwind"):
        return DissipationInfo(rate=rate)
    gamma = {blk.temp: _memory_gamma(mode, blk, u) for blk in mode.memory}
    gap = abs(rate + 0.5 * mode.varpi * sum(gamma.values()))
    form = "prony-exact" if mode.scheme == "prony-reduction" else "upwind-cellmass"
    return DissipationInfo(rate=rate, gamma=gamma, identity_gap=gap, gamma_form=form)


def matrix_text(mode):
    """Plain-text dump of the generator and weight (debugging aid)."""
    lines = [f"% mode n={mode.n} model={mode.model} scheme={mode.scheme} dim={mode.dim}",
             "% generator (row col re im)"]
    d = mode.dim
    for i in range(d):
        for j in range(d):
            z = mode.generator[i, j]
            if z != 0:
                lines.append(f"{i + 1} {j + 1} {z.real:.17g} {z.imag:.17g}")
    lines.append("% weight (row col value)")
    for i in range(d):
        for j in range(d):
            x = mode.weight[i, j]
            if x != 0:
                lines.append(f"{i + 1} {j + 1} {x:.17g}")
    return "\n".join(lines) + "\n"
