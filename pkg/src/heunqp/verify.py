"""Batch verification: every constructed solution and family entry against every available check.

Each check yields a ``Check`` record with status "pass", "fail" or "skip";
skips always carry a reason.  Results come back in input order whatever the
thread scheduling, so reports are reproducible.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .ansatz import (
    AnsatzSpec,
    Case,
    ClosedFormSolution,
    degeneracy_check,
    degenerate_partner,
    eigenvalue_formula,
    quasi_periodicity_factor,
    standard_grid,
)
from .elliptic import ellipk
from .errors import BranchUnavailableError, DegeneracyNotGuaranteed, DomainError, NoClosedFormError, VerificationError
from .families import SEEDS, _solutions, expand_family, transformed_eigenfunction
from .heun import frobenius_compare, pullback_solution, relative_residual_canonical, to_canonical
from .oracle import check_closed_form, discrete_spectrum

PASS, FAIL, SKIP = "pass", "fail", "skip"


@dataclass(frozen=True)
class Tolerances:
    residual: float = 1e-9
    pullback: float = 1e-8
    degeneracy: float = 1e-6
    quasi_periodicity: float = 1e-9
    pencil: float = 1e-10
    frobenius: float = 1e-8
    ode: float = 1e-7
    bloch: float = 1e-6

    def __post_init__(self):
        for k, v in self.__dict__.items():
            if not v > 0:
                raise DomainError(f"tolerance {k} must be positive")


@dataclass(frozen=True)
class Check:
    name: str
    subject: str
    status: str
    value: float | None
    tol: float
    reason: str = ""

    def as_dict(self) -> dict:
        return dict(name=self.name, subject=self.subject, status=self.status, value=self.value,
                    tol=self.tol, reason=self.reason)


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)

    def extend(self, more: Iterable[Check]):
        self.checks.extend(more)

    def count(self, status: str) -> int:
        return sum(c.status == status for c in self.checks)

    @property
    def failed(self) -> list[Check]:
        return [c for c in self.checks if c.status == FAIL]

    @property
    def ok(self) -> bool:
        return not self.failed

    def summary(self) -> dict:
        return {"total": len(self.checks), "pass": self.count(PASS), "fail": self.count(FAIL),
                "skip": self.count(SKIP)}


def threads() -> int:
    """Worker count: HEUNQP_THREADS if set, otherwise up to four."""
    env = os.environ.get("HEUNQP_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise DomainError("HEUNQP_THREADS must be a positive integer")
        return n
    return min(4, os.cpu_count() or 1)


def parallel_map(fn, items: list) -> list:
    n = threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _grade(name, subject, value, tol, reason_fail="") -> Check:
    ok = value <= tol
    return Check(name, subject, PASS if ok else FAIL, float(value), tol, "" if ok else reason_fail)


# --- per-spec checks -----------------------------------------------------------

def pencil_vs_formula(spec: AnsatzSpec, sols, tol: float, inject_dE: float = 0.0) -> Check:
    subject = spec.label()
    try:
        formula = [E + inject_dE for E in eigenvalue_formula(spec)]
    except NoClosedFormError as exc:
        return Check("pencil_vs_formula", subject, SKIP, None, tol, str(exc))
    pencil = [s.E for s in sols]
    if len(pencil) != len(formula):
        return Check("pencil_vs_formula", subject, FAIL, None, tol,
                     f"{len(pencil)} pencil energies but {len(formula)} closed-form energies")
    worst = 0.0
    for E in formula:
        worst = max(worst, min(abs(E - P) for P in pencil) / max(1.0, abs(E)))
    return _grade("pencil_vs_formula", subject, worst, tol, f"closed-form energy off the pencil by {worst:.3g}")


def _pullback_residual(sol: ClosedFormSolution) -> float:
    # the chart x = sn^2(y) is invertible on (0, K)
    y = standard_grid(sol.spec.m)
    x = to_canonical(y, sol.spec.m)
    G = pullback_solution(sol.form.evaluate, sol.spec.m)
    return float(np.max(relative_residual_canonical(sol.heun, G, x)))


def solution_checks(sol: ClosedFormSolution, index: int, tol: Tolerances, ode: bool = True) -> list[Check]:
    spec = sol.spec
    subject = f"{spec.label()} sol={index}"
    out = [
        _grade("residual", subject, sol.max_residual(), tol.residual, "phi-equation residual too large"),
        _grade("pullback_residual", subject, _pullback_residual(sol), tol.pullback, "canonical residual too large"),
    ]
    try:
        partner = degenerate_partner(sol)
    except DegeneracyNotGuaranteed as exc:
        out.append(Check("degeneracy", subject, SKIP, None, tol.degeneracy, str(exc)))
    except VerificationError as exc:
        out.append(Check("degeneracy", subject, FAIL, None, tol.degeneracy, str(exc)))
    else:
        out.append(_grade("partner_residual", subject, partner.max_residual(), tol.residual,
                          "partner residual too large"))
        dc = degeneracy_check(sol, partner)
        ok = dc.passed(tol.degeneracy)
        reason = "" if ok else (
            f"relative Wronskian {dc.relative:.3g}, Abel spread {dc.abel_deviation:.3g}, same Heun {dc.same_heun}")
        out.append(Check("degeneracy", subject, PASS if ok else FAIL, dc.relative, tol.degeneracy, reason))
    qp = quasi_periodicity_factor(sol)
    err = max(qp.deviation, abs(qp.mu - qp.predicted))
    out.append(_grade("quasi_periodicity", subject, err, tol.quasi_periodicity,
                      f"mu = {qp.mu:.12g}, expected {qp.predicted:.12g}"))
    fc = frobenius_compare(sol.heun, pullback_solution(sol.form.evaluate, spec.m), tol=tol.frobenius)
    val = None if math.isnan(fc.max_rel_error) else fc.max_rel_error
    out.append(Check("frobenius", subject, fc.status, val, tol.frobenius, "" if fc.status == PASS else fc.reason))
    if ode:
        K = ellipk(spec.m)
        sp_ = sol.spectral
        r = check_closed_form("phi_equation", (sol.gal, sp_.R, sp_.Q), spec.m, sol.form.evaluate, (0.1 * K, 1.9 * K))
        out.append(_grade("ode_oracle", subject, r.max_deviation, tol.ode, "integrated solution departs from the closed form"))
    return out


def spec_checks(spec: AnsatzSpec, tol: Tolerances, inject_dE: float = 0.0, ode: bool = True) -> list[Check]:
    sols = _solutions(spec)
    out = [pencil_vs_formula(spec, sols, tol.pencil, inject_dE)]
    if not sols:
        out.append(Check("residual", spec.label(), FAIL, None, tol.residual, "no solution constructed"))
    for i, sol in enumerate(sols):
        out.extend(solution_checks(sol, i, tol, ode))
    return out


@dataclass(frozen=True)
class Sweep:
    cases: tuple = (Case.B_HALF, Case.F_HALF, Case.G_HALF)
    halves: tuple = (Fraction(1, 2), Fraction(3, 2))
    Ns: tuple = (0, 1, 2)
    ps: tuple | None = None  # None: every 0 <= p <= N
    ts: tuple = (0.37, 0.81)
    ms: tuple = (0.36, 0.75)

    def specs(self) -> list[AnsatzSpec]:
        out = []
        for case in self.cases:
            for half in self.halves:
                for Nv in self.Ns:
                    for pv in (range(Nv + 1) if self.ps is None else self.ps):
                        for tv in self.ts:
                            for mv in self.ms:
                                out.append(AnsatzSpec(case, half, Nv, pv, tv, mv))
        return out


def run_sweep(sweep: Sweep, tol: Tolerances = Tolerances(), inject_dE: float = 0.0, ode: bool = True) -> Report:
    specs = sweep.specs()
    rep = Report()
    for chunk in parallel_map(lambda s: spec_checks(s, tol, inject_dE, ode), specs):
        rep.extend(chunk)
    return rep


# --- family entries ------------------------------------------------------------

def family_spot_checks(seeds: Iterable[str], rng_seed: int = 0, Ns=(0, 1, 2), ts=(0.37, 0.81),
                       ms=(0.36, 0.75), tol: float = 1e-7) -> list[Check]:
    """One randomized instantiation and sub-span per family entry and branch, checked by integration.

    Draws happen in a fixed order before any work starts, so the result is a
    function of ``rng_seed`` alone.
    """
    rng = np.random.default_rng(rng_seed)
    jobs = []
    for seed in seeds:
        for entry in expand_family(seed):
            for br in entry.heun.branches():
                Nv = int(rng.choice(Ns))
                pv = int(rng.integers(0, Nv + 1))
                tv, mv = float(rng.choice(ts)), float(rng.choice(ms))
                lo = float(rng.uniform(0.05, 0.6))
                jobs.append((entry, br, Nv, pv, tv, mv, (lo, lo + 0.35)))

    def one(job) -> Check:
        entry, br, Nv, pv, tv, mv, (lo, hi) = job
        subject = f"{entry.seed} {entry.word} branch={br} N={Nv} p={pv} t={tv:g} m={mv:g} span=({lo:.4f}K,{hi:.4f}K)"
        K = ellipk(mv)
        try:
            ts_ = transformed_eigenfunction(entry, Nv, pv, tv, mv, br)
            r = check_closed_form("elliptic_heun", ts_.heun, mv, ts_.form.evaluate, (lo * K, hi * K))
        except DomainError as exc:
            return Check("family_oracle", subject, SKIP, None, tol, f"pole-colliding instantiation: {exc}")
        except BranchUnavailableError as exc:
            return Check("family_oracle", subject, SKIP, None, tol, str(exc))
        return _grade("family_oracle", subject, r.max_deviation, tol, "integrated solution departs from the closed form")

    return parallel_map(one, jobs)


# --- Bloch oracle ----------------------------------------------------------------

def bloch_checks(ts=(0.37, 0.81), ms=(0.36, 0.75), tol: float = 1e-6, basis_size: int = 64) -> list[Check]:
    """Nonsingular case-1 solutions (f = g = 0, so N = 0) against the plane-wave eigensolver.

    The Bloch phase is the argument of the measured quasi-periodicity factor;
    the energy must also appear at the conjugate phase.
    """
    out = []
    for half in (Fraction(1, 2), Fraction(3, 2)):
        for tv in ts:
            for mv in ms:
                spec = AnsatzSpec(Case.B_HALF, half, 0, 0, tv, mv)
                for i, sol in enumerate(_solutions(spec)):
                    subject = f"{spec.label()} sol={i}"
                    theta = float(np.angle(quasi_periodicity_factor(sol).mu))
                    worst = 0.0
                    for phase in (theta, -theta):
                        ev = discrete_spectrum(sol.gal, phase, basis_size, n_levels=12)
                        worst = max(worst, float(np.min(np.abs(ev - sol.E))))
                    out.append(_grade("bloch_spectrum", subject, worst, tol,
                                      f"closed-form E = {sol.E:.12g} missing from the Bloch spectrum"))
    return out


def ode_checks(sweep: Sweep, tol: float = 1e-7) -> list[Check]:
    """Only the integrator comparison over (0.1K, 1.9K), for every solution of the sweep."""

    def one(spec: AnsatzSpec) -> list[Check]:
        K = ellipk(spec.m)
        out = []
        for i, sol in enumerate(_solutions(spec)):
            sp_ = sol.spectral
            r = check_closed_form("phi_equation", (sol.gal, sp_.R, sp_.Q), spec.m, sol.form.evaluate,
                                  (0.1 * K, 1.9 * K))
            out.append(_grade("ode_oracle", f"{spec.label()} sol={i}", r.max_deviation, tol,
                              "integrated solution departs from the closed form"))
        return out

    return [c for chunk in parallel_map(one, sweep.specs()) for c in chunk]
