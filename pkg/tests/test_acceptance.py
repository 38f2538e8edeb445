"""Acceptance battery: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdicts.
"""

import numpy as np
import pytest

import beamstab as bs
from beamstab import modal
from conftest import ref1_coeffs, random_states, wnorm
from test_resolvent import construction_oracle, construction_oracle_straight


def verdict(num, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def test_criterion_1_stability_number_arithmetic(ref1, refexp):
    r1 = bs.stability_numbers(ref1["BGP"])
    rm = bs.stability_numbers(ref1["BMC"])
    re_ = bs.stability_numbers(refexp)
    ok = (abs(r1.chi_g - 1) < 1e-12 and abs(r1.chi_h - 1) < 1e-12
          and abs(rm.chi_sigma - 1) < 1e-12
          and abs(re_.chi_g) < 1e-12 and abs(re_.chi_h) < 1e-12)
    verdict(1, ok,
            f"chi_g={r1.chi_g} chi_h={r1.chi_h} chi_sigma={rm.chi_sigma} "
            f"(reference) and chi_g={re_.chi_g} chi_h={re_.chi_h} (tuned)")


def _battery_rates(mode, states):
    R = mode.weight @ (mode.generator @ states.T)
    rates = np.real(np.sum(np.conj(states.T) * R, axis=0))
    norms = np.real(np.sum(np.conj(states.T) * (mode.weight @ states.T), axis=0))
    return rates, norms


def test_criterion_2_dissipativity_battery(ref1, rng):
    worst = -np.inf
    gap_prony = 0.0
    for tag, spec in ref1.items():
        for n in range(1, 65):
            mode = bs.assemble(spec, n)
            states = random_states(rng, mode.dim, 100)
            rates, norms = _battery_rates(mode, states)
            worst = max(worst, float(np.max(rates / norms)))
            if tag in ("BGP", "TGP"):
                for u in states[:5]:
                    info = bs.dissipation_rate(mode, u)
                    gap_prony = max(gap_prony,
                                    info.identity_gap / max(abs(info.rate), 1e-30))
    gap_sgrid = 0.0
    for tag in ("BGP", "TGP"):
        spec = ref1[tag]
        grid = bs.make_grid(spec.kernel_g, 256)
        for n in range(1, 65, 4):
            mode = bs.assemble(spec, n, grid=grid)
            states = random_states(rng, mode.dim, 20)
            rates, norms = _battery_rates(mode, states)
            worst = max(worst, float(np.max(rates / norms)))
            for u in states[:5]:
                info = bs.dissipation_rate(mode, u)
                gap_sgrid = max(gap_sgrid,
                                info.identity_gap / max(abs(info.rate), 1e-30))
    ok = worst <= 1e-10 and gap_prony < 1e-6 and gap_sgrid < 1e-3
    verdict(2, ok,
            f"max Re<Gu,u>/||u||^2 = {worst:.2e}; identity gap "
            f"prony {gap_prony:.2e} (<1e-6), upwind M=256 {gap_sgrid:.2e} (<1e-3)")


def test_criterion_3_quantified_riemann_lebesgue(unit_exp):
    closed_ok = all(
        abs(bs.rl_defect(unit_exp, lam) - 1.0 / np.sqrt(1.0 + lam * lam)) < 1e-10
        for lam in (10.0, 100.0, 1000.0))
    s = np.linspace(0.0, 23.0, 12001)
    tab = bs.tabulated_kernel(s, np.exp(-s), delta_tail=1.0, delta=1.0)
    gaps = [abs(bs.rl_defect(tab, lam) - 1.0 / np.sqrt(1.0 + lam * lam))
            for lam in (10.0, 100.0, 1000.0)]
    ok = closed_ok and max(gaps) < 1e-6
    verdict(3, ok,
            f"closed form within 1e-10; tabulated gaps {[f'{g:.1e}' for g in gaps]}")


def test_criterion_4_lower_bound_constants(ref1):
    c = ref1["BGP"].coeffs
    oc0, ob0, ocs = construction_oracle(c, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    seq = bs.lower_bound(ref1["BGP"], [64, 256])
    tc0, tb0, tcs = construction_oracle_straight(c, 1.0, 1.0, 1.0)
    seqt = bs.lower_bound(ref1["TGP"], [64, 256])
    const_ok = (abs(seq.c0 - 1.25) < 1e-12 and abs(seq.beta0 + 2.0) < 1e-12
                and abs(seq.cstar - 0.5) < 1e-12
                and abs(seqt.c0) < 1e-12 and abs(seqt.beta0 - 1.0) < 1e-12
                and abs(seqt.cstar - 1.0) < 1e-12)
    oracle_ok = (abs(seq.c0 - oc0) < 1e-12 and abs(seq.beta0 - ob0) < 1e-12
                 and abs(seq.cstar - ocs) < 1e-12
                 and abs(seqt.c0 - tc0) < 1e-12 and abs(seqt.beta0 - tb0) < 1e-12
                 and abs(seqt.cstar - tcs) < 1e-12)
    ratio_ok = True
    for s, cs in ((seq, 0.5), (seqt, 1.0)):
        r64, r256 = (r.ratio for r in s.rows)
        ratio_ok &= abs(r256 - cs) <= 0.05 * cs and abs(r256 - cs) < abs(r64 - cs)
    ok = const_ok and oracle_ok and ratio_ok
    verdict(4, ok,
            f"curved (c0,beta0,cstar)=({seq.c0},{seq.beta0},{seq.cstar}), "
            f"straight=({seqt.c0},{seqt.beta0},{seqt.cstar}); ratios at n=256: "
            f"{seq.rows[-1].ratio:.6f}, {seqt.rows[-1].ratio:.6f}")


def test_criterion_5_determinant_asymptotics(ref1):
    oks, details = [], []
    for tag in ("BGP", "BMC", "TGP"):
        d = bs.det_check(ref1[tag], 256)
        oks.append(d.gap_m < d.tol_hint and d.gap_a < d.tol_hint)
        details.append(f"{tag}: gaps ({d.gap_m:.2e}, {d.gap_a:.2e}) < {d.tol_hint:.2e}")
    re_seq = []
    for n in (16, 64, 256):
        d = bs.det_check(ref1["BGP"], n)
        om = bs.omega(ref1["BGP"].coeffs.ell, n)
        re_seq.append(abs(d.det_m.real) / om**8)
    oks.append(re_seq[2] < re_seq[1] < re_seq[0])
    verdict(5, all(oks), "; ".join(details) + f"; Re det/om^8 -> {re_seq[2]:.1e}")


def test_criterion_6_resolvent_growth(ref1, refexp):
    lams = np.geomspace(1e2, 1e4, 13)
    fits = {}
    for tag in ("BMC", "TGP"):
        samples = bs.sweep(ref1[tag], lams, 64)
        fits[tag] = bs.fit_growth(samples).exponent
    bounded = bs.sweep(refexp, lams, 64)
    vals = [s.value for s in bounded]
    ratio = max(vals) / min(vals)
    ok = all(abs(e - 2.0) <= 0.1 for e in fits.values()) and ratio < 3.0
    verdict(6, ok,
            f"growth exponents BMC {fits['BMC']:.3f}, TGP {fits['TGP']:.3f} "
            f"(2.0 +- 0.1); bounded-case max/min {ratio:.3f} (< 3)")


def test_criterion_7_semiuniform_decay(ref1, refexp):
    ts = np.geomspace(1e2, 1e4, 9)
    v256 = bs.semiuniform_series(ref1["BMC"], ts, 256)
    f256 = bs.decay_fit(ts, v256, "algebraic")
    v512 = bs.semiuniform_series(ref1["BMC"], ts, 512)
    f512 = bs.decay_fit(ts, v512, "algebraic")
    te = np.geomspace(1.0, 300.0, 10)
    ve = bs.semiuniform_series(refexp, te, 64)
    fe = bs.decay_fit(te, ve, "exponential")
    delta = -bs.spectral_abscissa(refexp, 64).global_max
    ok = (abs(f256.rate + 0.5) <= 0.1
          and abs(f512.rate - f256.rate) < 0.02
          and abs(fe.rate - delta) <= 0.1 * delta)
    verdict(7, ok,
            f"algebraic slope {f256.rate:.4f} (N=256), {f512.rate:.4f} (N=512); "
            f"exponential rate {fe.rate:.5f} vs abscissa {delta:.5f}")


def test_criterion_8_flux_map_equivalence(ref1, rng):
    spec = ref1["BGP"]
    twin = bs.mc_twin(spec)
    ts = np.linspace(0.0, 100.0, 21)
    worst = 0.0
    for n in range(1, 9):
        mg = bs.assemble(spec, n)
        mm = bs.assemble(twin, n)
        u0 = random_states(rng, mg.dim, 1)[0]
        tg = bs.propagate(mg, u0, ts)
        tm = bs.propagate(mm, bs.lambda_map(bs.ModalState(n, u0), spec).vec, ts)
        for j in range(ts.size):
            mapped = bs.lambda_map(bs.ModalState(n, tg.states[j]), spec)
            worst = max(worst, wnorm(mm.weight, mapped.vec - tm.states[j]))
    mg = bs.assemble(spec, 2)
    mm = bs.assemble(twin, 2)
    norm_gap = 0.0
    for v in random_states(rng, mm.dim, 100):
        u = bs.lambda_lift(bs.ModalState(2, v), spec)
        left = wnorm(mg.weight, mg.generator @ u.vec)
        right = wnorm(mm.weight, mm.generator @ v)
        norm_gap = max(norm_gap, abs(left - right) / max(right, 1e-30))
    ok = worst <= 1e-8 and norm_gap <= 1e-12
    verdict(8, ok,
            f"trajectory commutation gap {worst:.2e} (<= 1e-8); "
            f"generator-norm equality gap {norm_gap:.2e} (<= 1e-12)")


def test_criterion_9_singular_limit(ref1):
    rows = bs.singular_limit(ref1["BGP"], [1e-1, 1e-2, 1e-3, 1e-4])
    gaps = [r.gap_g for r in rows]
    at3 = rows[2]
    rescale_ok = (abs(at3.chi_g - at3.target_g) <= 0.01 * abs(at3.target_g)
                  and all(b < a for a, b in zip(gaps, gaps[1:])))
    mixed = bs.singular_limit(ref1["BGP"], [1e-1, 1e-2, 1e-3, 1e-4], m=0.5)
    mgaps = [r.gap_g for r in mixed]
    mix_ok = (mixed[0].target_g == rows[0].target_g
              and all(b < a for a, b in zip(mgaps, mgaps[1:]))
              and mixed[-1].gap_g <= 0.01)
    ok = rescale_ok and mix_ok
    verdict(9, ok,
            f"chi_g(eps=1e-3)={at3.chi_g:.6f} vs target {at3.target_g}; "
            f"gaps decrease {gaps[0]:.1e} -> {gaps[-1]:.1e}; mixture agrees")


def test_criterion_10_degeneracy_detection():
    c = ref1_coeffs(l=1.0)
    viol = bs.mode_condition(c, 100)
    spec = bs.SystemSpec("BF", c)
    W1 = bs.weight_matrix(spec, 1)
    ew, V = np.linalg.eigh(W1)
    singular_1 = ew[0] <= 1e-12 * ew[-1]
    null = V[:, 0]
    ref = np.zeros(8)
    ref[0], ref[4] = 1.0, -1.0  # (defl, rot, axial) = (1, 0, -1)
    ref /= np.linalg.norm(ref)
    null_ok = abs(abs(null @ ref) - 1.0) < 1e-10
    others_ok = all(
        np.linalg.eigvalsh(bs.weight_matrix(spec, n))[0] > 1e-10
        for n in range(2, 101))
    ok = viol == [1] and singular_1 and null_ok and others_ok
    verdict(10, ok,
            f"violations={viol}; mode-1 null vector matches (1, 0, -1); "
            f"modes 2..100 positive definite")
