"""Exact Heun parameter families and their symmetry images.

Each seed is one of the six closed-form solution classes (case 1, 2 or 3
with half-integral strength 1/2 or 3/2), written in exact arithmetic in the
symbols N, p, t, m.  Strength-3/2 seeds carry two values of 4mq; the branch
is the symbol ``pm`` (pm^2 = 1) multiplying the radical.

Words in the symmetry generators act on the GAL strengths, 4mq is
transported at fixed energy, and the eigenfunction of an image is obtained
from the seed eigenfunction by a translation and a Jacobi monomial weight:

    F_word(y) = sn^es cn^ec dn^ed (y) * F_seed(y + shift)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np
import sympy as sp

from .ansatz import AnsatzSpec, Case, ClosedFormSolution, construct, degenerate_partner, energy_parts, standard_grid
from .closedform import ProductForm
from .errors import DegeneracyNotGuaranteed, DomainError, VerificationError
from .gal import GalParams, SymmetryOp, apply_symmetry, heun_values, shift_of, transport_R
from .heun import HeunParams, relative_residual_elliptic
from .jring import shift_images

N, p, t, m = sp.symbols("N p t m")
PM = sp.Symbol("pm")
SYMBOLS = (N, p, t, m, PM)
HALF = sp.Rational(1, 2)
THREE_HALF = sp.Rational(3, 2)

HEUN_FIELDS = ("gamma", "delta", "epsilon", "alpha", "beta", "fourmq")

SEEDS = {
    "Eq16": (Case.B_HALF, Fraction(1, 2)),
    "Eq17": (Case.B_HALF, Fraction(3, 2)),
    "Eq3_21": (Case.F_HALF, Fraction(1, 2)),
    "Eq3_22": (Case.F_HALF, Fraction(3, 2)),
    "Eq3_29": (Case.G_HALF, Fraction(1, 2)),
    "Eq3_30": (Case.G_HALF, Fraction(3, 2)),
}
SEED_ALIASES = {
    "eq16": "Eq16",
    "eq17": "Eq17",
    "eq3.21": "Eq3_21",
    "eq3.22": "Eq3_22",
    "eq3.29": "Eq3_29",
    "eq3.30": "Eq3_30",
}

SHIFT_WORDS = ((), ("shift_K",), ("shift_iK'",), ("shift_K_iK'",))
NEGATION_WORDS = tuple(
    tuple(c for c, keep in zip(("negate_b", "negate_f", "negate_g"), mask) if keep)
    for mask in itertools.product((0, 1), repeat=3)
)


def canon(expr) -> str:
    """Canonical string of an exact expression: expanded, with ``^`` for powers."""
    return str(sp.expand(sp.sympify(expr))).replace("**", "^")


def same(a, b) -> bool:
    return sp.expand(sp.sympify(a) - sp.sympify(b)) == 0


# --- symbolic entries --------------------------------------------------------

@dataclass(frozen=True)
class SymbolicHeun:
    gamma: sp.Expr
    delta: sp.Expr
    epsilon: sp.Expr
    alpha: sp.Expr
    beta: sp.Expr
    fourmq: sp.Expr

    def constraint(self) -> sp.Expr:
        """gamma + delta + eps - alpha - beta - 1, which must vanish identically."""
        return sp.expand(self.gamma + self.delta + self.epsilon - self.alpha - self.beta - 1)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in HEUN_FIELDS}

    @cached_property
    def key(self) -> tuple[str, ...]:
        """Identity of the Heun equation: alpha and beta enter only as an unordered pair."""
        ab = tuple(sorted((canon(self.alpha), canon(self.beta))))
        return (canon(self.gamma), canon(self.delta), canon(self.epsilon)) + ab + (canon(self.fourmq),)

    @cached_property
    def ordered_key(self) -> tuple[str, ...]:
        return tuple(canon(getattr(self, k)) for k in HEUN_FIELDS)

    def branches(self) -> tuple[int, ...]:
        return (1, -1) if self.fourmq.has(PM) else (1,)


@dataclass(frozen=True)
class EigfunRecipe:
    """F_new(y) = sn^es cn^ec dn^ed (y) * F_seed(y + shift)."""

    shift: str | None
    es: sp.Expr
    ec: sp.Expr
    ed: sp.Expr

    def describe(self) -> str:
        arg = f"y+{self.shift}" if self.shift else "y"
        parts = [f"F({arg})"]
        for name, e in (("sn", self.es), ("cn", self.ec), ("dn", self.ed)):
            if not same(e, 0):
                parts.append(f"{name}^({canon(e)})")
        return " * ".join(parts)


@dataclass(frozen=True)
class FamilyEntry:
    seed: str
    word: SymmetryOp
    gal: GalParams
    heun: SymbolicHeun
    recipe: EigfunRecipe

    @property
    def case(self) -> Case:
        return SEEDS[self.seed][0]

    @property
    def half(self) -> Fraction:
        return SEEDS[self.seed][1]

    def row(self) -> dict:
        out = {"seed": self.seed, "word": str(self.word)}
        out.update({k: canon(v) for k, v in self.heun.as_dict().items()})
        out["eigenfunction"] = self.recipe.describe()
        return out


def seed_gal(case: Case, half) -> GalParams:
    h = sp.Rational(half.numerator, half.denominator)
    a = t - HALF
    if case is Case.B_HALF:
        return GalParams(a, h, N - p, p, m)
    if case is Case.F_HALF:
        return GalParams(a, N - p, h, p, m)
    return GalParams(a, p, N - p, h, m)


def seed_R(case: Case, half) -> sp.Expr:
    """4mq = R = -E + m(g+b)^2 + (f+g)^2 at the closed-form energy.

    E = base + pm sqrt(radicand); pm selects the branch.
    """
    gal = seed_gal(case, half)
    base, rad = energy_parts(case, half, gal, N, t)
    E = base if rad is None else base + PM * sp.sqrt(sp.expand(rad))
    return sp.expand(-E + m * (gal.g + gal.b) ** 2 + (gal.f + gal.g) ** 2)


def _symbolic_heun(gal: GalParams, R) -> SymbolicHeun:
    v = heun_values(gal, R)
    return SymbolicHeun(**{k: sp.expand(sp.sympify(v[k])) for k in HEUN_FIELDS})


def _recipe(word: SymmetryOp, g0: GalParams, g1: GalParams) -> EigfunRecipe:
    # phi = dn^b cn^f sn^g psi and psi_new(y) = psi_seed(y + shift)
    kind = shift_of(word)
    es, ec, ed = g1.g - g0.g, g1.f - g0.f, g1.b - g0.b
    if kind is not None:
        images = shift_images(kind, 0.5)  # exponents only; constants drop out
        es, ec, ed = g1.g, g1.f, g1.b
        for power, (_, ex) in zip((-g0.g, -g0.f, -g0.b), images):
            es, ec, ed = es + power * ex[0], ec + power * ex[1], ed + power * ex[2]
    return EigfunRecipe(kind, sp.expand(es), sp.expand(ec), sp.expand(ed))


def make_entry(seed: str, word: SymmetryOp | tuple = ()) -> FamilyEntry:
    word = word if isinstance(word, SymmetryOp) else SymmetryOp(tuple(word))
    case, half = SEEDS[seed]
    g0 = seed_gal(case, half)
    R0 = seed_R(case, half)
    g1 = apply_symmetry(word, g0)
    R1 = sp.expand(transport_R(word, g0, R0))
    heun = _symbolic_heun(g1, R1)
    if heun.constraint() != 0:
        raise VerificationError(f"{seed} under {word}: gamma+delta+eps != alpha+beta+1")
    return FamilyEntry(seed, word, g1, heun, _recipe(word, g0, g1))


def seed_families() -> list[FamilyEntry]:
    return [make_entry(name) for name in SEEDS]


def all_words() -> list[SymmetryOp]:
    """t-reflection first, then negations, then one translation: 64 words.

    Applied to a seed the leading t-reflection is exactly t -> -t.
    """
    out = []
    for refl in ((), ("t_reflection",)):
        for neg in NEGATION_WORDS:
            for sh in SHIFT_WORDS:
                out.append(SymmetryOp(refl + neg + sh))
    return out


@lru_cache(maxsize=None)
def _expand_cached(seed: str) -> tuple[tuple[FamilyEntry, ...], int, int]:
    seen: dict[tuple, FamilyEntry] = {}
    ordered = set()
    words = all_words()
    for w in words:
        e = make_entry(seed, w)
        ordered.add(e.heun.ordered_key)
        seen.setdefault(e.heun.key, e)
    entries = tuple(sorted(seen.values(), key=lambda e: e.heun.key))
    return entries, len(words), len(ordered)


def expand_family(seed: FamilyEntry | str) -> list[FamilyEntry]:
    """Distinct symmetry images of a seed (alpha, beta compared as an unordered pair)."""
    name = seed.seed if isinstance(seed, FamilyEntry) else seed
    return list(_expand_cached(name)[0])


# --- golden tables -----------------------------------------------------------

_PM_PRINTED = sp.Symbol("pm_printed")


def _e(s: str) -> sp.Expr:
    return sp.sympify(s, locals={"N": N, "p": p, "t": t, "m": m, "pm": _PM_PRINTED})


@dataclass(frozen=True)
class Printed:
    label: str
    seed: str
    word: tuple[str, ...]
    fields: dict


def _printed(label, seed, word, gamma, delta, epsilon, alpha, beta, fourmq) -> Printed:
    vals = dict(gamma=gamma, delta=delta, epsilon=epsilon, alpha=alpha, beta=beta, fourmq=fourmq)
    return Printed(label, seed, word, {k: _e(v) for k, v in vals.items()})


# transcribed field by field; "pm" marks a printed plus-or-minus
PRINTED = (
    _printed("Eq16", "Eq16", (), "1/2-p", "1/2-N+p", "0", "-(N-t)/2", "-(N+t)/2", "N^2-t^2"),
    _printed("Eq17", "Eq17", (), "1/2-p", "1/2-N+p", "-1", "-(N+1-t)/2", "-(N+1+t)/2",
             "N^2-t^2-1+(2*p+1)*m + pm*sqrt((2*p+1)^2*m^2+4*m*(N+1)*(N-2*p)+4*(1-m)*t^2)"),
    _printed("Eq18", "Eq16", ("shift_K",), "1/2-N+p", "1/2-p", "1-t", "-(N+t-2)/2", "-(N+t)/2",
             "N^2-t^2+m*(N+t)*(N+t-2*p-1)"),
    _printed("Eq19", "Eq16", ("shift_iK'",), "1-t", "0", "1/2-N+p", "-(N+t-p-1)/2", "-(N+t)/2",
             "m*(N+t)*(N+t-2*p-1)"),
    _printed("Eq20", "Eq16", ("shift_K_iK'",), "0", "1-t", "1/2-p", "-(p+t-1)/2", "-(p+t)/2", "0"),
    _printed("Eq24a", "Eq16", ("negate_b",), "1/2-p", "1/2+p-N", "2", "-(N-t-2)/2", "-(N+t-2)/2",
             "N^2-t^2-2*m*(2*p-1)"),
    _printed("Eq24b", "Eq16", ("negate_f",), "1/2-p", "3/2+N-p", "0", "(N+t+1-2*p)/2", "-(N+1-t-2*p)/2",
             "N^2-t^2-(2*p-1)*(2*N-2*p+1)"),
    _printed("Eq24c", "Eq16", ("negate_g",), "3/2+p", "1/2+p-N", "0", "(2*p+t+1-N)/2", "-(2*p+1-t-N)/2",
             "N^2-t^2-(2*p+1)*(2*N-2*p-1)"),
    _printed("Eq24d", "Eq16", ("negate_b", "negate_f"), "1/2-p", "3/2+N-p", "2", "(N+t+3-2*p)/2",
             "-(N+3-t-2*p)/2", "N^2-t^2-2*m*(2*p-1)-(2*p-1)*(2*N-2*p+1)"),
    _printed("Eq24e", "Eq16", ("negate_b", "negate_g"), "3/2+p", "1/2+p-N", "2", "(2*p+t+3-N)/2",
             "-(2*p+3-t-N)/2", "N^2-t^2+2*m*(2*p+3)-(2*p+1)*(2*N-2*p-1)"),
    _printed("Eq24f", "Eq16", ("negate_f", "negate_g"), "3/2+p", "3/2+N-p", "0", "(N+t+2)/2", "-(N+2-t)/2",
             "N^2-t^2+4*(N+1)"),
    _printed("Eq24g", "Eq16", ("negate_b", "negate_f", "negate_g"), "3/2+p", "3/2+N-p", "2", "(N+t+4)/2",
             "-(N+4-t)/2", "N^2-t^2+2*m*(2*p+3)+4*(N+1)"),
    _printed("Eq3_21", "Eq3_21", (), "1/2-p", "0", "1/2-N+p", "-(N-t)/2", "-(N+t)/2", "m*(N^2-t^2)"),
    _printed("Eq3_22", "Eq3_22", (), "1/2-p", "-1", "1/2-N+p", "-(N+1-t)/2", "-(N+1+t)/2",
             "m*(N^2-t^2-1)+(2*p+1) + pm*sqrt((2*p+1)^2+4*m*(N+1)*(N-2*p)-4*m*(1-m)*t^2)"),
    _printed("Eq3_29", "Eq3_29", (), "0", "1/2-N+p", "1/2-p", "-(N-t)/2", "-(N+t)/2", "0"),
    _printed("Eq3_30", "Eq3_30", (), "-1", "1/2-N+p", "1/2-p", "-(N+1-t)/2", "-(N+1+t)/2",
             "2*(N-p)+(2*p+1)*m + pm*sqrt((1-m)*((2*N-2*p+1)^2-(2*p+1)^2*m)+4*m*t^2)"),
)
PRINTED_BY_LABEL = {e.label: e for e in PRINTED}
EQ16_GOLDEN = ("Eq18", "Eq19", "Eq20", "Eq24a", "Eq24b", "Eq24c", "Eq24d", "Eq24e", "Eq24f", "Eq24g")
SEED_GOLDEN = ("Eq3_21", "Eq3_22", "Eq3_29", "Eq3_30")


def _fields_equal(derived, printed, name: str) -> bool:
    if name != "fourmq" or not printed.has(_PM_PRINTED):
        return same(derived, printed)
    # compare the two branches as a set
    d = {canon(derived.subs(PM, s)) for s in (1, -1)}
    q = {canon(printed.subs(_PM_PRINTED, s)) for s in (1, -1)}
    return d == q


def _strength_invariant(gamma, delta, eps, alpha, beta) -> list[sp.Expr]:
    """Sorted-free invariants x(x+1) over the four strengths implied by a Heun set."""
    b, f, g = HALF - eps, HALF - delta, HALF - gamma
    # alpha - beta = +-(a + 1/2), so a(a+1) = (alpha-beta)^2 - 1/4
    aa = sp.expand((alpha - beta) ** 2 - sp.Rational(1, 4))
    return [aa, sp.expand(b * (b + 1)), sp.expand(f * (f + 1)), sp.expand(g * (g + 1))]


def _same_multiset(xs, ys) -> bool:
    rest = list(ys)
    for x in xs:
        for i, y in enumerate(rest):
            if same(x, y):
                del rest[i]
                break
        else:
            return False
    return not rest


@dataclass
class GoldenResult:
    label: str
    word: str
    matches: dict  # field -> bool
    printed_consistent: bool
    reason: str
    derived: dict = field(default_factory=dict)
    printed: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return all(self.matches.values())

    @property
    def accepted(self) -> bool:
        """Exact match, or every mismatch sits in a printed entry shown to be inconsistent."""
        return self.exact or not self.printed_consistent


def printed_consistency(pr: Printed) -> tuple[bool, str]:
    """Check a printed entry against rules it must obey whatever the derivation.

    (i) gamma + delta + eps = alpha + beta + 1;
    (ii) its strengths {a, b, f, g} are a symmetry image of the seed's, so the
         multiset of x(x+1) over the four strengths equals the seed's;
    (iii) for seeds, 4mq equals the value implied by the printed energy formula
         at every branch, checked numerically against the independent pencil.
    """
    f = pr.fields
    c = sp.expand(f["gamma"] + f["delta"] + f["epsilon"] - f["alpha"] - f["beta"] - 1)
    if c != 0:
        return False, f"printed entry violates gamma+delta+eps = alpha+beta+1 (defect {canon(c)})"
    case, half = SEEDS[pr.seed]
    g0 = seed_gal(case, half)
    seed_inv = [sp.expand(x * (x + 1)) for x in g0.strengths()]
    inv = _strength_invariant(f["gamma"], f["delta"], f["epsilon"], f["alpha"], f["beta"])
    if not _same_multiset(inv, seed_inv):
        return False, "printed alpha, beta are not those of any symmetry image of the seed strengths"
    if not pr.word:
        bad = _printed_R_not_an_eigenvalue(pr)
        if bad:
            return False, bad
    return True, "self-consistent"


def _printed_R_not_an_eigenvalue(pr: Printed) -> str:
    """Numerically test the printed seed 4mq against pencil eigenvalues at a few points."""
    case, half = SEEDS[pr.seed]
    expr = pr.fields["fourmq"]
    for Nv, pv, tv, mv in ((2, 1, 0.37, 0.5), (3, 0, 0.81, 0.36)):
        spec = AnsatzSpec(case, half, Nv, pv, tv, mv)
        gal = spec.gal
        Rs = [complex(-s.E + mv * float(gal.g + gal.b) ** 2 + float(gal.f + gal.g) ** 2) for s in _solutions(spec)]
        for sgn in ((1, -1) if expr.has(_PM_PRINTED) else (1,)):
            val = complex(expr.subs({N: Nv, p: pv, t: tv, m: mv, _PM_PRINTED: sgn}).evalf())
            if min(abs(val - R) for R in Rs) > 1e-8 * max(1.0, abs(val)):
                return (
                    f"printed 4mq = {val:.6g} at N={Nv}, p={pv}, t={tv}, m={mv} is not among the "
                    f"pencil eigenvalues {[complex(round(R.real, 6), round(R.imag, 6)) for R in Rs]}"
                )
    return ""


def golden_compare(label: str) -> GoldenResult:
    pr = PRINTED_BY_LABEL[label]
    entry = make_entry(pr.seed, pr.word)
    derived = entry.heun.as_dict()
    matches = {}
    for k in HEUN_FIELDS:
        if k in ("alpha", "beta"):
            continue
        matches[k] = _fields_equal(derived[k], pr.fields[k], k)
    # alpha and beta as an unordered pair
    straight = same(derived["alpha"], pr.fields["alpha"]) and same(derived["beta"], pr.fields["beta"])
    swapped = same(derived["alpha"], pr.fields["beta"]) and same(derived["beta"], pr.fields["alpha"])
    if straight or swapped:
        matches["alpha"] = matches["beta"] = True
    else:
        a_hit = any(same(pr.fields["alpha"], derived[x]) for x in ("alpha", "beta"))
        b_hit = any(same(pr.fields["beta"], derived[x]) for x in ("alpha", "beta"))
        matches["alpha"], matches["beta"] = a_hit, b_hit
    ok, reason = printed_consistency(pr)
    return GoldenResult(
        label,
        str(entry.word),
        matches,
        ok,
        reason,
        {k: canon(v) for k, v in derived.items()},
        {k: canon(v).replace("pm_printed", "(+-)") for k, v in pr.fields.items()},
    )


# --- numerical instantiation -------------------------------------------------

@lru_cache(maxsize=4096)
def _solutions(spec: AnsatzSpec) -> tuple[ClosedFormSolution, ...]:
    return tuple(construct(spec))


@lru_cache(maxsize=None)
def _lambdified(seed: str, word: tuple):
    entry = make_entry(seed, word)
    fns = {k: sp.lambdify(SYMBOLS, v, "numpy") for k, v in entry.heun.as_dict().items()}
    r = entry.recipe
    fns.update({k: sp.lambdify(SYMBOLS, getattr(r, k), "numpy") for k in ("es", "ec", "ed")})
    fns["seed_R"] = sp.lambdify(SYMBOLS, seed_R(*SEEDS[seed]), "numpy")
    return fns


_PARTNERS: dict[int, tuple[ClosedFormSolution, ClosedFormSolution]] = {}


def _partner(sol: ClosedFormSolution) -> ClosedFormSolution:
    # seed solutions are cached, so identity is a stable key
    hit = _PARTNERS.get(id(sol))
    if hit is None or hit[0] is not sol:
        hit = (sol, degenerate_partner(sol))
        _PARTNERS[id(sol)] = hit
    return hit[1]


def _value(fn, Nv, pv, tv, mv, branch):
    z = complex(fn(Nv, pv, complex(tv), complex(mv), branch))
    return z.real if abs(z.imag) <= 1e-14 * max(1.0, abs(z.real)) else z


def instantiate(entry: FamilyEntry, Nv: int, pv: int, tv: float, mv: float, branch: int = 1) -> HeunParams:
    fns = _lambdified(entry.seed, entry.word.word)
    v = {k: _value(fns[k], Nv, pv, tv, mv, branch) for k in HEUN_FIELDS}
    return HeunParams(
        alpha=v["alpha"], beta=v["beta"], gamma=v["gamma"], delta=v["delta"], epsilon=v["epsilon"],
        q=v["fourmq"] / (4 * mv), c=1.0 / mv,
    )


@dataclass
class TransformedSolution:
    entry: FamilyEntry
    heun: HeunParams
    form: ProductForm
    seed_solution: ClosedFormSolution
    branch: int
    m: float

    def __call__(self, y):
        return self.form.evaluate(y)

    def max_residual(self, y=None) -> float:
        y = standard_grid(self.m) if y is None else y
        return float(np.max(relative_residual_elliptic(self.heun, self.form.evaluate, y, self.m)))


def _pick_branch(entry: FamilyEntry, sols, Nv, pv, tv, mv, branch) -> ClosedFormSolution:
    fns = _lambdified(entry.seed, entry.word.word)
    R_target = complex(fns["seed_R"](Nv, pv, complex(tv), complex(mv), branch))
    spec = sols[0].spec
    gal = spec.gal
    def R_of(s):
        return complex(-s.E + mv * float(gal.g + gal.b) ** 2 + float(gal.f + gal.g) ** 2)
    best = min(sols, key=lambda s: abs(R_of(s) - R_target))
    if abs(R_of(best) - R_target) > 1e-8 * max(1.0, abs(R_target)):
        raise VerificationError(f"no pencil solution for {entry.seed} branch {branch}: R = {R_target}")
    return best


def _transform(entry: FamilyEntry, sol: ClosedFormSolution, Nv, pv, tv) -> ProductForm:
    fns = _lambdified(entry.seed, entry.word.word)
    form = sol.form
    if entry.recipe.shift is not None:
        form = form.shifted(entry.recipe.shift)
    es, ec, ed = (float(np.real(fns[k](Nv, pv, tv, sol.spec.m, 1))) for k in ("es", "ec", "ed"))
    return form.times_monomial(es, ec, ed)


def transformed_eigenfunction(
    entry: FamilyEntry, Nv: int, pv: int, tv: float, mv: float, branch: int = 1, partner: bool = False
) -> TransformedSolution:
    """Closed-form evaluator for the eigenfunction attached to a family entry."""
    if not 0 <= pv <= Nv:
        raise DomainError(f"need 0 <= p <= N, got p={pv}, N={Nv}")
    case, half = SEEDS[entry.seed]
    spec = AnsatzSpec(case, half, Nv, pv, tv, mv)
    sols = _solutions(spec)
    if not sols:
        raise VerificationError(f"no closed-form seed solution for {spec.label()}")
    sol = _pick_branch(entry, sols, Nv, pv, tv, mv, branch)
    if partner:
        sol = _partner(sol)
    return TransformedSolution(
        entry, instantiate(entry, Nv, pv, tv, mv, branch), _transform(entry, sol, Nv, pv, tv), sol, branch, mv
    )


@dataclass
class InstanceCheck:
    seed: str
    word: str
    N: int
    p: int
    t: float
    m: float
    branch: int
    status: str  # "pass", "fail" or "skip"
    residual: float
    partner_residual: float
    reason: str = ""


def verify_instance(entry: FamilyEntry, Nv, pv, tv, mv, branch=1, tol: float = 1e-8) -> InstanceCheck:
    base = dict(seed=entry.seed, word=str(entry.word), N=Nv, p=pv, t=tv, m=mv, branch=branch)
    try:
        ts = transformed_eigenfunction(entry, Nv, pv, tv, mv, branch)
        r = ts.max_residual()
        try:
            r2 = transformed_eigenfunction(entry, Nv, pv, tv, mv, branch, partner=True).max_residual()
        except DegeneracyNotGuaranteed:
            r2 = float("nan")
    except DomainError as exc:  # includes pole proximity
        return InstanceCheck(**base, status="skip", residual=float("nan"), partner_residual=float("nan"), reason=str(exc))
    ok = r <= tol and (np.isnan(r2) or r2 <= tol)
    reason = "" if ok else f"residual {r:.3g}, partner {r2:.3g} > {tol}"
    return InstanceCheck(**base, status="pass" if ok else "fail", residual=r, partner_residual=r2, reason=reason)


def sweep_instances(
    seeds=tuple(SEEDS), Ns=(0, 1, 2), ts=(0.37, 0.81), ms=(0.36, 0.75), tol: float = 1e-8
) -> list[InstanceCheck]:
    out = []
    for seed in seeds:
        for entry in expand_family(seed):
            for Nv in Ns:
                for pv in range(Nv + 1):
                    for tv in ts:
                        for mv in ms:
                            for br in entry.heun.branches():
                                out.append(verify_instance(entry, Nv, pv, tv, mv, br, tol))
    return out


# --- counting ----------------------------------------------------------------

REFERENCE_PER_SEED = 32
REFERENCE_TOTAL = 192


@dataclass
class SeedCount:
    seed: str
    words: int
    distinct: int
    distinct_ordered: int

    @property
    def agrees(self) -> bool:
        return self.distinct == REFERENCE_PER_SEED


@dataclass
class CountReport:
    per_seed: list[SeedCount]
    total: int
    union: int
    identification_rule: str
    multiplicity: list[dict]

    @property
    def agrees(self) -> bool:
        return self.total == REFERENCE_TOTAL and all(s.agrees for s in self.per_seed)

    def as_dict(self) -> dict:
        return {
            "per_seed": [
                {
                    "seed": s.seed,
                    "words": s.words,
                    "distinct": s.distinct,
                    "distinct_ordered_alpha_beta": s.distinct_ordered,
                    "reference": REFERENCE_PER_SEED,
                    "agrees": s.agrees,
                }
                for s in self.per_seed
            ],
            "total": self.total,
            "total_reference": REFERENCE_TOTAL,
            "total_agrees": self.total == REFERENCE_TOTAL,
            "union_across_seeds": self.union,
            "identification_rule": self.identification_rule,
            "multiplicity": self.multiplicity,
        }


IDENTIFICATION_RULE = (
    "two words give the same set when (gamma, delta, eps, 4mq) agree exactly and {alpha, beta} "
    "agree as an unordered pair; a two-branch 4mq counts as one set"
)


def multiplicity_check(seed: str, Nv: int, tv: float = 0.37, mv: float = 0.5) -> dict:
    """Number of distinct solution sets (p values with a constructed solution) at fixed N."""
    case, half = SEEDS[seed]
    sets, energies = 0, set()
    for pv in range(Nv + 1):
        sols = _solutions(AnsatzSpec(case, half, Nv, pv, tv, mv))
        if sols:
            sets += 1
        for s in sols:
            energies.add((round(complex(s.E).real, 9), round(complex(s.E).imag, 9)))
    return {"seed": seed, "N": Nv, "sets": sets, "energies": len(energies), "expected_sets": Nv + 1,
            "agrees": sets == Nv + 1}


def grand_count(max_N: int = 4) -> CountReport:
    per_seed, keys = [], set()
    for seed in SEEDS:
        entries, nwords, nordered = _expand_cached(seed)
        per_seed.append(SeedCount(seed, nwords, len(entries), nordered))
        keys.update(e.heun.key for e in entries)
    mult = [multiplicity_check(s, Nv) for s in ("Eq16", "Eq17") for Nv in range(max_N + 1)]
    return CountReport(per_seed, sum(s.distinct for s in per_seed), len(keys), IDENTIFICATION_RULE, mult)


# --- structural patterns -----------------------------------------------------------

IMAGE_GAMMAS = ("1/2-p", "3/2+p", "1/2+p-N", "3/2+N-p", "0", "2", "1+t", "1-t")


def image_gamma_pattern() -> dict:
    """gamma values of the Eq16 expansion and the four groups of eight (gamma, delta, eps) patterns."""
    allowed = [_e(s) for s in IMAGE_GAMMAS]
    entries = expand_family("Eq16")
    stray = [canon(e.heun.gamma) for e in entries if not any(same(e.heun.gamma, a) for a in allowed)]
    groups = {
        "gamma in {1/2-p,3/2+p}, delta in {1/2+p-N,3/2+N-p}, eps in {0,2}": (
            ("1/2-p", "3/2+p"), ("1/2+p-N", "3/2+N-p"), ("0", "2")),
        "gamma in {1/2+p-N,3/2+N-p}, delta in {1/2-p,3/2+p}, eps in {1+t,1-t}": (
            ("1/2+p-N", "3/2+N-p"), ("1/2-p", "3/2+p"), ("1+t", "1-t")),
        "gamma in {0,2}, delta in {1+t,1-t}, eps in {1/2-p,3/2+p}": (
            ("0", "2"), ("1+t", "1-t"), ("1/2-p", "3/2+p")),
        "gamma in {1+t,1-t}, delta in {0,2}, eps in {1/2+p-N,3/2+N-p}": (
            ("1+t", "1-t"), ("0", "2"), ("1/2+p-N", "3/2+N-p")),
    }
    counts = {}
    for name, (gs, ds, es) in groups.items():
        counts[name] = sum(
            1
            for e in entries
            if any(same(e.heun.gamma, _e(x)) for x in gs)
            and any(same(e.heun.delta, _e(x)) for x in ds)
            and any(same(e.heun.epsilon, _e(x)) for x in es)
        )
    return {"stray_gammas": stray, "group_counts": counts, "total": len(entries),
            "agrees": not stray and all(c == 8 for c in counts.values())}


def three_half_exponent_check() -> dict:
    """(gamma, delta, eps) of the Eq17 images equal those of Eq16 with 0 -> -1 and 2 -> 3."""
    swap = {"0": sp.Integer(-1), "2": sp.Integer(3)}
    mismatched = []
    for w in all_words():
        a = make_entry("Eq16", w).heun
        b = make_entry("Eq17", w).heun
        for k in ("gamma", "delta", "epsilon"):
            va = getattr(a, k)
            want = swap.get(canon(va), va)
            if not same(want, getattr(b, k)):
                mismatched.append((str(w), k, canon(va), canon(getattr(b, k))))
    return {"words": len(all_words()), "mismatches": mismatched, "agrees": not mismatched}


# --- printed N = 1 eigenfunctions ------------------------------------------------

def _printed_form(label: str, tv: float, mv: float) -> ProductForm:
    from .jring import JPoly

    s, c, d = JPoly.sn(mv), JPoly.cn(mv), JPoly.dn(mv)
    kp = float(np.sqrt(1.0 - mv))
    one = JPoly.const(1.0, mv)
    pf = ProductForm(mv)
    if label == "Eq21":
        return pf.times(c + s * 1j, tv).times(c + s * (1j * tv))
    if label == "Eq22":
        return pf.times(c + s * (1j * kp), tv).times(c * tv + s * (1j * kp)).times_monomial(ed=-(1 + tv))
    if label == "Eq23":
        return pf.times(one - d, tv).times(one * tv - d).times_monomial(es=-(1 + tv))
    if label == "Eq24":
        return pf.times(d - one * kp, tv).times(d * tv - one * kp).times_monomial(ec=-(1 + tv))
    raise KeyError(label)


PRINTED_EIGENFUNCTIONS = {
    "Eq21": ("Eq16", ()),
    "Eq22": ("Eq16", ("shift_K",)),
    "Eq23": ("Eq16", ("shift_iK'",)),
    "Eq24": ("Eq16", ("shift_K_iK'",)),
}


@dataclass
class EigenfunctionComparison:
    label: str
    word: str
    spread: float  # max |ratio - median| / |median| of constructed / printed
    constructed_residual: float
    printed_residual: float
    partner_spread: float

    def matches(self, tol: float = 1e-9) -> bool:
        return self.spread <= tol or self.partner_spread <= tol


def _ratio_spread(f, g, y) -> float:
    r = f.value(y) / g.value(y)
    ref = complex(np.median(r.real) + 1j * np.median(r.imag))
    return float(np.max(np.abs(r - ref)) / abs(ref))


def compare_printed_eigenfunction(label: str, tv: float = 0.37, mv: float = 0.5, n: int = 50) -> EigenfunctionComparison:
    """Printed N=1, p=0 eigenfunction versus the constructed one, up to a constant factor.

    The residual of the printed function is taken against the derived Heun
    parameters of the same word.
    """
    seed, word = PRINTED_EIGENFUNCTIONS[label]
    entry = make_entry(seed, word)
    ts = transformed_eigenfunction(entry, 1, 0, tv, mv)
    tp = transformed_eigenfunction(entry, 1, 0, tv, mv, partner=True)
    printed = _printed_form(label, tv, mv)
    y = standard_grid(mv, n)
    r_printed = float(np.max(relative_residual_elliptic(ts.heun, printed.evaluate, y, mv)))
    return EigenfunctionComparison(
        label,
        str(entry.word),
        _ratio_spread(ts.form, printed, y),
        ts.max_residual(y),
        r_printed,
        _ratio_spread(tp.form, printed, y),
    )
