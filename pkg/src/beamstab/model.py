"""System coefficients, stability numbers and stability classification.

Six model tags are supported.  The curved-beam (Bresse) family couples three
wave equations to two temperatures; the straight-beam (Timoshenko) family
drops the axial motion and keeps one temperature.  The heat law is selected
by the suffix: GP (memory convolution), MC (relaxed flux), F (classical).

    BGP  BMC  BF      curved beam, two temperatures
    TGP  TMC  TF      straight beam, one temperature

Each model has a governing combination of stability numbers whose vanishing
is equivalent to exponential decay of the solution semigroup; otherwise the
decay is polynomial of order 1/2 on smooth data, and that rate is sharp.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels as kmod
from .errors import DomainError, InfeasibleError, SpecError

__all__ = [
    "MODELS",
    "BRESSE_MODELS",
    "TIMOSHENKO_MODELS",
    "EXPONENTIAL",
    "POLY_SQRT",
    "BeamCoefficients",
    "SystemSpec",
    "StabilityReport",
    "stability_numbers",
    "classify",
    "check_physical",
    "mode_condition",
    "tune_chi_zero",
    "governing_factors",
]

MODELS = ("BGP", "BMC", "TGP", "TMC", "BF", "TF")
BRESSE_MODELS = frozenset({"BGP", "BMC", "BF"})
TIMOSHENKO_MODELS = frozenset({"TGP", "TMC", "TF"})
MEMORY_MODELS = frozenset({"BGP", "TGP"})
RELAXED_MODELS = frozenset({"BMC", "TMC"})

EXPONENTIAL = "ExponentiallyStable"
POLY_SQRT = "PolynomialSqrtOptimal"

DEFAULT_TOL = 1e-9

# governing stability factors per model; the product must vanish for
# exponential stability
GOVERNING = {
    "BGP": ("chi_g", "chi_h"),
    "BMC": ("chi_sigma", "chi_tau"),
    "TGP": ("chi_g",),
    "TMC": ("chi_sigma",),
    "BF": ("chi0", "chi1"),
    "TF": ("chi0",),
}


@dataclass(frozen=True)
class BeamCoefficients:
    """Structural constants of the beam; all strictly positive.

    ``l`` is the initial curvature (zero for straight beams), ``ell`` the
    beam length.  ``sigma``/``tau`` are flux relaxation times and only
    meaningful for the MC models.
    """

    rho1: float
    rho2: float
    rho3: float
    k: float
    k0: float
    b: float
    varpi: float
    gamma: float
    l: float
    ell: float
    sigma: float = None
    tau: float = None

    def __post_init__(self):
        named = {
            "rho1": self.rho1, "rho2": self.rho2, "rho3": self.rho3,
            "k": self.k, "k0": self.k0, "b": self.b,
            "varpi": self.varpi, "gamma": self.gamma, "ell": self.ell,
        }
        for name, v in named.items():
            if not (np.isfinite(v) and v > 0):
                raise SpecError(f"coefficient {name} must be strictly positive, got {v}")
        if not (np.isfinite(self.l) and self.l >= 0):
            raise SpecError(f"curvature l must be nonnegative, got {self.l}")
        for name, v in (("sigma", self.sigma), ("tau", self.tau)):
            if v is not None and not (np.isfinite(v) and v > 0):
                raise SpecError(f"relaxation time {name} must be strictly positive, got {v}")


@dataclass(frozen=True)
class SystemSpec:
    """A model tag plus everything needed to realize it.

    Memory-law tags require admissible kernels of unit total g-mass
    (kernel_h only for the curved beam); relaxed-flux tags require the
    relaxation times.  Straight-beam tags ignore l, k0, kernel_h and tau.
    """

    model: str
    coeffs: BeamCoefficients
    kernel_g: kmod.MemoryKernel = None
    kernel_h: kmod.MemoryKernel = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise SpecError(f"unknown model tag {self.model!r}; expected one of {MODELS}")
        c = self.coeffs
        if self.model in MEMORY_MODELS:
            if self.kernel_g is None:
                raise SpecError(f"{self.model} requires kernel_g")
            _require_system_kernel(self.kernel_g, "kernel_g")
            if self.model == "BGP":
                if self.kernel_h is None:
                    raise SpecError("BGP requires kernel_h")
                _require_system_kernel(self.kernel_h, "kernel_h")
        if self.model in RELAXED_MODELS:
            if c.sigma is None:
                raise SpecError(f"{self.model} requires the relaxation time sigma")
            if self.model == "BMC" and c.tau is None:
                raise SpecError("BMC requires the relaxation time tau")

    @property
    def is_bresse(self):
        return self.model in BRESSE_MODELS

    @property
    def effective_l(self):
        """Curvature actually used: straight-beam tags behave as l = 0."""
        return self.coeffs.l if self.is_bresse else 0.0

    def heat_masses(self):
        """(varpi*g(0), mu(0)) per temperature, resolving MC tags through the
        equivalent exponential kernels.  Entries are None when undefined."""
        c = self.coeffs
        if self.model in MEMORY_MODELS:
            mg = kmod.masses(self.kernel_g)
            out_g = (c.varpi * mg.g0, mg.mu0)
            out_h = None
            if self.model == "BGP":
                mh = kmod.masses(self.kernel_h)
                out_h = (c.varpi * mh.g0, mh.mu0)
            return out_g, out_h
        if self.model in RELAXED_MODELS:
            out_g = (1.0 / c.sigma, 1.0 / (c.varpi * c.sigma) ** 2)
            out_h = None
            if self.model == "BMC":
                out_h = (1.0 / c.tau, 1.0 / (c.varpi * c.tau) ** 2)
            return out_g, out_h
        return None, None


def _require_system_kernel(kernel, name):
    rep = kmod.check_admissibility(kernel)
    if not rep.admissible:
        bad = [c.name for c in rep.checks if c.required and not c.passed]
        raise SpecError(f"{name} is not admissible (failed: {', '.join(bad)})")
    gap = rep["unit_mass"].margin
    if gap > kmod.UNIT_MASS_TOL:
        raise SpecError(
            f"{name} must have unit total g-mass inside a memory-law system "
            f"(|mass - 1| = {gap:.3e})")


@dataclass(frozen=True)
class StabilityReport:
    """All stability numbers defined for a model and the classification.

    ``scales`` holds, for each number, the magnitude of its ingredient terms;
    vanishing is always judged relative to that scale.  ``phydef_ok`` is the
    pair (k0 == b rho1/rho2, b > k rho2/rho1).
    """

    model: str
    chi0: float
    chi1: float
    sigma_g: float = None
    sigma_h: float = None
    chi_g: float = None
    chi_h: float = None
    chi_sigma: float = None
    chi_tau: float = None
    classification: str = ""
    governing: tuple = ()
    tol: float = DEFAULT_TOL
    phydef_ok: tuple = (False, False)
    scales: dict = field(default_factory=dict)

    def value(self, name):
        return getattr(self, name)


def _chi_memory(c, heat_mass, chi_factor):
    """chi for a memory/relaxed law: (rho3/x - rho1/k) * chi_factor + gamma^2/x
    with x = varpi*g(0); returns (value, scale-of-terms)."""
    x = heat_mass
    t1 = (c.rho3 / x) * chi_factor
    t2 = (c.rho1 / c.k) * chi_factor
    t3 = c.gamma**2 / x
    return t1 - t2 + t3, abs(t1) + abs(t2) + abs(t3)


def stability_numbers(spec, tol=DEFAULT_TOL):
    """Compute every stability number defined for the model and classify.

    chi0/chi1 depend on the elastic constants only; the thermal numbers fold
    in varpi*g(0) (memory laws) or the relaxation times (relaxed laws).
    """
    c = spec.coeffs
    scales = {}
    chi0 = c.b - c.k * c.rho2 / c.rho1
    scales["chi0"] = c.b + c.k * c.rho2 / c.rho1
    chi1 = c.k0 - c.k
    scales["chi1"] = c.k0 + c.k

    kwargs = {}
    if spec.model not in ("BF", "TF"):
        (mass_g, _), mh = spec.heat_masses()
        kwargs["sigma_g"] = mass_g - c.rho3 * c.k / c.rho1
        if spec.model in ("BGP", "TGP"):
            val, sc = _chi_memory(c, mass_g, chi0)
            kwargs["chi_g"] = val
            scales["chi_g"] = sc
        else:
            # relaxed flux: chi_sigma = (sigma rho3 - rho1/k) chi0 + gamma^2 sigma
            t1, t2, t3 = c.sigma * c.rho3 * chi0, (c.rho1 / c.k) * chi0, c.gamma**2 * c.sigma
            kwargs["chi_sigma"] = t1 - t2 + t3
            scales["chi_sigma"] = abs(t1) + abs(t2) + abs(t3)
        if mh is not None:
            mass_h = mh[0]
            kwargs["sigma_h"] = mass_h - c.rho3 * c.k / c.rho1
            if spec.model == "BGP":
                val, sc = _chi_memory(c, mass_h, chi1)
                kwargs["chi_h"] = val
                scales["chi_h"] = sc
            else:
                t1, t2, t3 = c.tau * c.rho3 * chi1, (c.rho1 / c.k) * chi1, c.gamma**2 * c.tau
                kwargs["chi_tau"] = t1 - t2 + t3
                scales["chi_tau"] = abs(t1) + abs(t2) + abs(t3)

    report = StabilityReport(
        model=spec.model, chi0=chi0, chi1=chi1, tol=tol,
        governing=GOVERNING[spec.model], phydef_ok=_phydef(c), scales=scales,
        **kwargs)
    return replace(report, classification=classify(report, spec.model, tol))


def governing_factors(report, model):
    """(name, value, scale) triples for the model's governing product."""
    out = []
    for name in GOVERNING[model]:
        v = report.value(name)
        if v is None:
            raise SpecError(f"report lacks {name} required by model {model}")
        out.append((name, v, report.scales.get(name, abs(v) or 1.0)))
    return out


def classify(report, model, tol=DEFAULT_TOL):
    """Vanishing test on the governing number(s), relative to their scales."""
    for _name, value, scale in governing_factors(report, model):
        if abs(value) <= tol * scale:
            return EXPONENTIAL
    return POLY_SQRT


def _phydef(c, rel_tol=1e-12):
    eq = abs(c.k0 - c.b * c.rho1 / c.rho2) <= rel_tol * max(c.k0, c.b * c.rho1 / c.rho2)
    gt = c.b > c.k * c.rho2 / c.rho1
    return (bool(eq), bool(gt))


def check_physical(coeffs, report):
    """Physical-constraint check and its compatibility with exponential decay.

    Returns (phydef_ok, exp_condition_compatible).  For the classical-law
    models the constraints force both chi0 and chi1 positive, so the
    exponential condition can never hold alongside them; for the hyperbolic
    models compatibility is just whether the computed product vanishes.
    """
    phydef = _phydef(coeffs)
    compatible = classify(report, report.model, report.tol) == EXPONENTIAL
    return phydef, compatible


def mode_condition(coeffs, n_max, tol=1e-9):
    """All n <= n_max with l*ell within tol of n*pi (degenerate energy weight)."""
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    x = coeffs.l * coeffs.ell
    return [n for n in range(1, n_max + 1) if abs(x - n * np.pi) < tol]


def tune_chi_zero(coeffs, target):
    """Solve chi = 0 for the heat-law parameter.

    For ``chi_g``/``chi_h`` the returned value is the required varpi*g(0)
    (resp. varpi*h(0)); for ``chi_sigma``/``chi_tau`` it is the relaxation
    time itself.  Raises if no strictly positive solution exists.
    """
    c = coeffs
    factor = {"chi_g": c.b - c.k * c.rho2 / c.rho1,
              "chi_h": c.k0 - c.k,
              "chi_sigma": c.b - c.k * c.rho2 / c.rho1,
              "chi_tau": c.k0 - c.k}.get(target)
    if factor is None:
        raise DomainError(f"unknown tuning target {target!r}")
    num = c.rho3 * factor + c.gamma**2
    den = (c.rho1 / c.k) * factor
    if den == 0 or num == 0 or (num > 0) != (den > 0):
        raise InfeasibleError(
            f"{target} = 0 has no positive solution for these coefficients")
    if target in ("chi_g", "chi_h"):
        # (rho3/x - rho1/k) factor + gamma^2/x = 0  =>  x = k(rho3 f + g^2)/(rho1 f)
        return c.k * num / (c.rho1 * factor)
    # (s rho3 - rho1/k) factor + gamma^2 s = 0  =>  s = (rho1/k) f / (rho3 f + g^2)
    return den / num
