"""Batch command-line interface.

    beamstab <command> --config PATH [--threads N] [--out DIR]

Commands: stability, sweep, lowerbound, decay, spectrum, limit, check.
A single JSON config describes the system and the per-command blocks; every
output file starts with a header recording the tool version and a hash of
the config, so runs are reproducible byte for byte.

Exit codes: 0 success, 2 config/spec error, 3 numeric error.
"""

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, dynamics, kernels, modal, model, resolvent, svg
from .errors import (AdmissibilityError, BeamstabError, DomainError, FitError,
                     InfeasibleError, NumericError, SpecError,
                     SpectralPointError, UnsupportedMapError)

CONFIG_ERRORS = (SpecError, DomainError, AdmissibilityError, InfeasibleError,
                 UnsupportedMapError)
NUMERIC_ERRORS = (NumericError, SpectralPointError, FitError,
                  np.linalg.LinAlgError)

COEFF_FIELDS = ("rho1", "rho2", "rho3", "k", "k0", "b", "varpi", "gamma", "ell")


def _fmt(x):
    """17 significant digits, '.' decimal, reproducible."""
    return format(float(x), ".17g")


@dataclass
class RunConfig:
    spec: model.SystemSpec
    tolerance: float
    grid: modal.MemoryGrid
    sweep: dict
    lowerbound: dict
    decay: dict
    spectrum: dict
    limit: dict
    out_dir: Path
    formats: tuple
    config_hash: str


def _need(dct, field, where):
    if field not in dct:
        raise SpecError(f"config is missing required field {where}.{field}")
    return dct[field]


def _positive(value, where):
    if not (isinstance(value, (int, float)) and np.isfinite(value) and value > 0):
        raise SpecError(f"config field {where} must be a positive number, got {value!r}")
    return float(value)


def load_config(path, out_override=None):
    """Parse and fully validate a run config; no computation happens here."""
    raw_text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(raw_text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"config is not valid JSON: {exc}") from None
    cfg_hash = hashlib.sha256(raw_text.encode("utf-8")).hexdigest()[:12]

    tag = _need(raw, "model", "")
    csrc = _need(raw, "coefficients", "")
    kwargs = {f: _positive(_need(csrc, f, "coefficients"), f"coefficients.{f}")
              for f in COEFF_FIELDS}
    kwargs["l"] = float(csrc.get("l", 0.0))
    for opt in ("sigma", "tau"):
        if csrc.get(opt) is not None:
            kwargs[opt] = _positive(csrc[opt], f"coefficients.{opt}")
    coeffs = model.BeamCoefficients(**kwargs)

    kernel_g = kernel_h = None
    if tag in model.MEMORY_MODELS:
        if "kernel_g" not in raw:
            raise SpecError(f"config is missing required field kernel_g for model {tag}")
        kernel_g = kernels.kernel_from_config(raw["kernel_g"])
        if tag == "BGP":
            if "kernel_h" not in raw:
                raise SpecError("config is missing required field kernel_h for model BGP")
            kernel_h = kernels.kernel_from_config(raw["kernel_h"])
    spec = model.SystemSpec(model=tag, coeffs=coeffs,
                            kernel_g=kernel_g, kernel_h=kernel_h)

    grid = None
    mem = raw.get("memory", {})
    if mem.get("scheme") == "sgrid-upwind":
        nodes = int(mem.get("nodes", 128))
        grid = modal.make_grid(kernel_g, nodes, policy=mem.get("policy", "geometric"))
    elif tag in model.MEMORY_MODELS and kernel_g.kind == "tabulated":
        grid = modal.make_grid(kernel_g, int(mem.get("nodes", 128)))

    def block(name, defaults, checks=()):
        got = dict(defaults)
        got.update(raw.get(name, {}))
        for check in checks:
            check(got)
        return got

    def ordered_range(b, lo_key, hi_key, name):
        lo, hi = b[lo_key], b[hi_key]
        if not (0 <= lo < hi):
            raise SpecError(f"config block {name} needs 0 <= {lo_key} < {hi_key}")
        if int(b["points"]) < 2:
            raise SpecError(f"config block {name} needs points >= 2")
        if int(b["n_max"]) < 1:
            raise SpecError(f"config block {name} needs n_max >= 1")

    sweep_blk = block("sweep",
                      dict(lambda_min=1e2, lambda_max=1e4, points=13, n_max=64,
                           peak_refine=True, full_range=False),
                      [lambda b: ordered_range(b, "lambda_min", "lambda_max", "sweep")])
    decay_blk = block("decay",
                      dict(t_min=1e2, t_max=1e4, points=9, n_max=128, kind="auto"),
                      [lambda b: ordered_range(b, "t_min", "t_max", "decay")])
    lb_blk = block("lowerbound", dict(n_list=[16, 64, 256]))
    if not lb_blk["n_list"] or any(int(n) < 1 for n in lb_blk["n_list"]):
        raise SpecError("config block lowerbound.n_list needs positive mode indices")
    spectrum_blk = block("spectrum", dict(n_max=64))
    if int(spectrum_blk["n_max"]) < 1:
        raise SpecError("config block spectrum needs n_max >= 1")
    limit_blk = block("limit", dict(eps_list=[1e-1, 1e-2, 1e-3, 1e-4], m=None))
    eps = [float(e) for e in limit_blk["eps_list"]]
    if not eps or any(e <= 0 for e in eps) or any(nxt >= prev for prev, nxt in zip(eps, eps[1:])):
        raise SpecError("config block limit.eps_list must be positive and decreasing")

    out_blk = raw.get("output", {})
    formats = tuple(out_blk.get("formats", ["csv"]))
    bad = set(formats) - {"csv", "svg"}
    if bad:
        raise SpecError(f"unknown output formats: {sorted(bad)}")
    out_dir = Path(out_override or out_blk.get("dir", "out"))

    return RunConfig(
        spec=spec, tolerance=float(raw.get("tolerance", model.DEFAULT_TOL)),
        grid=grid, sweep=sweep_blk, lowerbound=lb_blk, decay=decay_blk,
        spectrum=spectrum_blk, limit=limit_blk, out_dir=out_dir,
        formats=formats, config_hash=cfg_hash)


def _header(cfg, command):
    return f"# beamstab {__version__} config={cfg.config_hash} command={command}"


def _write_csv(cfg, command, name, columns, rows):
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / name
    lines = [_header(cfg, command), ",".join(columns)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(_fmt(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _write_json(cfg, command, name, payload):
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / name
    body = {"tool": f"beamstab {__version__}", "config_hash": cfg.config_hash,
            "command": command}
    body.update(payload)
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _write_svg(cfg, name, text):
    if "svg" not in cfg.formats:
        return None
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / name
    path.write_text(text, encoding="utf-8")
    return path


def cmd_stability(cfg, args):
    rep = model.stability_numbers(cfg.spec, tol=cfg.tolerance)
    phydef, compatible = model.check_physical(cfg.spec.coeffs, rep)
    print(f"model {rep.model}: {rep.classification}")
    for name in ("chi0", "chi1", "chi_g", "chi_h", "chi_sigma", "chi_tau",
                 "sigma_g", "sigma_h"):
        v = getattr(rep, name)
        if v is not None:
            print(f"  {name} = {_fmt(v)}")
    print(f"  governing product: {' * '.join(rep.governing)}"
          f" (vanishing tolerance {_fmt(rep.tol)} relative)")
    print(f"  physical constraints: equal_wave_speeds={phydef[0]}"
          f" poisson_positive={phydef[1]} exponential_compatible={compatible}")
    payload = {
        "model": rep.model, "classification": rep.classification,
        "governing": list(rep.governing), "tolerance": rep.tol,
        "numbers": {name: getattr(rep, name)
                    for name in ("chi0", "chi1", "chi_g", "chi_h", "chi_sigma",
                                 "chi_tau", "sigma_g", "sigma_h")
                    if getattr(rep, name) is not None},
        "phydef_ok": list(phydef), "exp_condition_compatible": compatible,
    }
    _write_json(cfg, "stability", "stability.json", payload)
    return 0


def cmd_sweep(cfg, args):
    blk = cfg.sweep
    lams = np.geomspace(blk["lambda_min"], blk["lambda_max"], int(blk["points"]))
    samples = resolvent.sweep(
        cfg.spec, lams, int(blk["n_max"]), grid=cfg.grid,
        peak_refine=bool(blk["peak_refine"]), full_range=bool(blk["full_range"]),
        threads=args.threads)
    rows = [(s.lam, s.value, s.argmax_n) for s in samples]
    _write_csv(cfg, "sweep", "sweep.csv", ("lambda", "value", "argmax_n"), rows)
    payload = {"samples": len(samples),
               "max_value": max(s.value for s in samples),
               "min_value": min(s.value for s in samples)}
    try:
        fit = resolvent.fit_growth(samples)
        payload["fit"] = {"exponent": fit.exponent, "intercept": fit.intercept,
                          "residual": fit.residual, "count": fit.count}
        print(f"sweep: {len(samples)} samples, log-log exponent {fit.exponent:.3f}")
    except FitError:
        print(f"sweep: {len(samples)} samples (too few for a growth fit)")
    _write_json(cfg, "sweep", "sweep_fit.json", payload)
    _write_svg(cfg, "sweep.svg", svg.line_chart(
        [s.lam for s in samples], [[s.value for s in samples]],
        labels=["sup_n resolvent norm"], title="resolvent sweep",
        logx=True, logy=True))
    return 0


def cmd_lowerbound(cfg, args):
    ns = [int(n) for n in cfg.lowerbound["n_list"]]
    seq = resolvent.lower_bound(cfg.spec, ns)
    rows = []
    for r in seq.rows:
        dc = resolvent.det_check(cfg.spec, r.n)
        rows.append((r.n, r.omega, r.lam, r.muhat.real, r.muhat.imag,
                     r.det_m.real, r.det_m.imag, r.det_a.real, r.det_a.imag,
                     r.amp, r.amp_cramer, r.ratio, seq.cstar,
                     dc.gap_m, dc.gap_a, dc.tol_hint))
    _write_csv(cfg, "lowerbound", "lowerbound.csv",
               ("n", "omega", "lambda", "muhat_re", "muhat_im",
                "det_m_re", "det_m_im", "det_a_re", "det_a_im",
                "amp", "amp_cramer", "ratio", "cstar",
                "det_m_gap", "det_a_gap", "det_tol_hint"), rows)
    payload = {"c0": seq.c0, "beta0": seq.beta0, "cstar": seq.cstar,
               "forcing_norm": seq.forcing_norm, "notes": list(seq.notes)}
    _write_json(cfg, "lowerbound", "lowerbound.json", payload)
    print(f"lower bound: c0={_fmt(seq.c0)} beta0={_fmt(seq.beta0)} "
          f"cstar={_fmt(seq.cstar)}")
    for r in seq.rows:
        print(f"  n={r.n}: |A|/lambda = {r.ratio:.6f}")
    return 0


def cmd_decay(cfg, args):
    blk = cfg.decay
    ts = np.geomspace(blk["t_min"], blk["t_max"], int(blk["points"]))
    vals = dynamics.semiuniform_series(cfg.spec, ts, int(blk["n_max"]), grid=cfg.grid)
    kind = blk["kind"]
    if kind == "auto":
        rep = model.stability_numbers(cfg.spec, tol=cfg.tolerance)
        kind = "exponential" if rep.classification == model.EXPONENTIAL else "algebraic"
    fit = dynamics.decay_fit(ts, vals, kind)
    _write_csv(cfg, "decay", "decay.csv", ("t", "value"), list(zip(ts, vals)))
    mode1 = modal.assemble(cfg.spec, 1, grid=cfg.grid)
    u0 = np.zeros(mode1.dim, dtype=complex)
    u0[mode1.index("defl_t")] = 1.0
    traj = dynamics.propagate(mode1, u0, np.linspace(0.0, float(blk["t_max"]) ** 0.5, 64))
    _write_csv(cfg, "decay", "decay_energy.csv", ("t", "energy"),
               list(zip(traj.t, traj.energy)))
    payload = {"kind": fit.kind, "rate": fit.rate, "constant": fit.constant,
               "residual": fit.residual, "window": list(fit.window),
               "n_max": int(blk["n_max"])}
    _write_json(cfg, "decay", "decay_fit.json", payload)
    _write_svg(cfg, "decay.svg", svg.line_chart(
        ts, [vals], labels=["semiuniform norm"], title="smoothed-propagator decay",
        logx=(fit.kind == "algebraic"), logy=True))
    print(f"decay: kind={fit.kind} rate={fit.rate:.6f} residual={fit.residual:.3e} "
          f"(n_max={blk['n_max']})")
    return 0


def cmd_spectrum(cfg, args):
    n_max = int(cfg.spectrum["n_max"])
    sa = resolvent.spectral_abscissa(cfg.spec, n_max, grid=cfg.grid)
    _write_csv(cfg, "spectrum", "spectrum.csv", ("n", "abscissa"),
               list(zip(sa.ns.tolist(), sa.per_mode)))
    _write_json(cfg, "spectrum", "spectrum.json",
                {"global_max": sa.global_max, "argmax_n": sa.argmax_n,
                 "n_max": n_max})
    print(f"spectrum: global abscissa {sa.global_max:.6e} at n={sa.argmax_n} "
          f"(n_max={n_max})")
    return 0


def cmd_limit(cfg, args):
    rows = dynamics.singular_limit(cfg.spec, cfg.limit["eps_list"],
                                   m=cfg.limit.get("m"))
    out = []
    for r in rows:
        out.append((r.eps, r.chi_g, r.target_g, r.gap_g,
                    "" if r.chi_h is None else _fmt(r.chi_h),
                    "" if r.target_h is None else _fmt(r.target_h),
                    "" if r.gap_h is None else _fmt(r.gap_h)))
    _write_csv(cfg, "limit", "limit.csv",
               ("eps", "chi_g_eps", "target_g", "gap_g",
                "chi_h_eps", "target_h", "gap_h"), out)
    print("singular limit:")
    for r in rows:
        print(f"  eps={r.eps:g}: chi_g={r.chi_g:.6f} (target {r.target_g:.6f})")
    return 0


def _battery(cfg, rng):
    """The invariant battery behind ``check``: yields (name, ok, detail)."""
    spec = cfg.spec
    if spec.model in model.MEMORY_MODELS:
        for kname, kern in (("kernel_g", spec.kernel_g), ("kernel_h", spec.kernel_h)):
            if kern is None:
                continue
            rep = kernels.check_admissibility(kern)
            for c in rep.checks:
                yield (f"admissibility.{kname}.{c.name}", c.passed,
                       f"margin={c.margin:.3e}")
        defects = [kernels.rl_defect(spec.kernel_g, 10.0 ** p) for p in range(1, 5)]
        ok = all(x > y for x, y in zip(defects, defects[1:]))
        yield ("riemann_lebesgue_decay", ok,
               " ".join(f"{d:.3e}" for d in defects))

    viol = model.mode_condition(spec.coeffs, 100)
    yield ("mode_condition_n_le_100", not viol, f"violations={viol}")

    worst = -np.inf
    worst_gap = 0.0
    contraction = 0.0
    for n in (1, 2, 4, 8, 16):
        mode = modal.assemble(spec, n, grid=cfg.grid)
        for _ in range(20):
            u = rng.normal(size=mode.dim) + 1j * rng.normal(size=mode.dim)
            info = modal.dissipation_rate(mode, u)
            nrm = float(np.real(np.conj(u) @ (mode.weight @ u)))
            worst = max(worst, info.rate / nrm)
            if info.identity_gap is not None:
                scale = max(abs(info.rate), 1e-30)
                worst_gap = max(worst_gap, info.identity_gap / scale)
        Wh, Whi = modal.weight_sqrt(mode.weight)
        for t in (0.5, 5.0, 50.0):
            traj_mat = Wh @ (dynamics._propagator(mode)(t) @ Whi)
            contraction = max(contraction,
                              float(np.linalg.svd(traj_mat, compute_uv=False)[0]))
    yield ("dissipativity", worst <= 1e-10, f"max Re<Gu,u>/|u|^2 = {worst:.3e}")
    if spec.model in model.MEMORY_MODELS:
        yield ("dissipation_identity", worst_gap <= 1e-8,
               f"max relative gap = {worst_gap:.3e}")
    yield ("contraction", contraction <= 1.0 + 1e-10,
           f"max ||exp(tG)||_W = {contraction:.12f}")

    if spec.model in model.MEMORY_MODELS and spec.kernel_g.kind == "prony" \
            and len(spec.kernel_g.terms) == 1:
        try:
            twin = dynamics.mc_twin(spec)
        except UnsupportedMapError:
            twin = None
        if twin is not None:
            err = 0.0
            for n in (1, 2, 4):
                mg = modal.assemble(spec, n)
                mm = modal.assemble(twin, n)
                u0 = rng.normal(size=mg.dim) + 1j * rng.normal(size=mg.dim)
                ts = np.linspace(0.0, 10.0, 11)
                tg = dynamics.propagate(mg, u0, ts)
                v0 = dynamics.lambda_map(dynamics.ModalState(n, u0), spec)
                tm = dynamics.propagate(mm, v0.vec, ts)
                for j in range(ts.size):
                    mapped = dynamics.lambda_map(
                        dynamics.ModalState(n, tg.states[j]), spec)
                    d = mapped.vec - tm.states[j]
                    err = max(err, float(np.sqrt(np.real(
                        np.conj(d) @ (mm.weight @ d)))))
            yield ("flux_map_commutation", err <= 1e-8, f"max gap = {err:.3e}")


def cmd_check(cfg, args):
    rng = np.random.default_rng(0)
    results = list(_battery(cfg, rng))
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    payload = {"status": "pass" if all(ok for _, ok, _ in results) else "fail",
               "checks": [{"name": n, "ok": bool(ok), "detail": d}
                          for n, ok, d in results]}
    _write_json(cfg, "check", "check.json", payload)
    if args.dump_modes:
        dump = Path(args.dump_modes)
        dump.mkdir(parents=True, exist_ok=True)
        for n in (1, 2):
            mode = modal.assemble(cfg.spec, n, grid=cfg.grid)
            (dump / f"mode_{n}.txt").write_text(modal.matrix_text(mode),
                                                encoding="utf-8")
    return 0


COMMANDS = {
    "stability": cmd_stability,
    "sweep": cmd_sweep,
    "lowerbound": cmd_lowerbound,
    "decay": cmd_decay,
    "spectrum": cmd_spectrum,
    "limit": cmd_limit,
    "check": cmd_check,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="beamstab",
        description="Stability laboratory for thermoelastic beam systems.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap on worker threads for sweeps")
    parser.add_argument("--dump-modes", default=None, metavar="DIR",
                        help="(check) dump mode matrices as text")
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, out_override=args.out)
    except FileNotFoundError as exc:
        print(f"error: config file not found: {exc.filename}", file=sys.stderr)
        return 2
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, args)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as exc:
        ctx = ""
        if isinstance(exc, SpectralPointError):
            ctx = f" (lambda={exc.lam}, n={exc.n})"
        print(f"numeric error: {exc}{ctx}", file=sys.stderr)
        return 3
    except BeamstabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
