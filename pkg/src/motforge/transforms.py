"""Transformations (T, h) of couplings and costs.

A pair (T, h) acts on a finite measure on the plane by moving each atom
(x, y, m) to (T(x, y), m h(x, y)); costs transform as c' = (c / h) o T^-1,
so that the integral of c' against the image equals the integral of c
against the original.  The affine family and the change of numeraire are
the pairs that map competitors to competitors; everything else fails on a
concrete competitor pair, which the classifier reports.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._common import Verdict
from .costs import CostFunction
from .measures import (Coupling, DiscreteMeasure, SupportSet, barycenter, make_coupling,
                       make_measure, marginals)
from .monotone import canonical_pair, min_over_competitors, verify_C123
from .motlp import MotSolution, martingale_constraints, solve_mot
from .simplex import OPTIMAL, lp_solve

NUMERAIRE_MARGIN = 1e-9


class TransformDomainError(ValueError):
    """A point lies outside the domain (or image domain) of a transform."""


@dataclass(frozen=True)
class Domain:
    """Rectangle I x J.  Lower bounds may be strict (with a small margin)."""

    x_lo: float = -math.inf
    x_hi: float = math.inf
    y_lo: float = -math.inf
    y_hi: float = math.inf
    strict_lower: bool = False

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.strict_lower:
            lo_ok = (x > self.x_lo + NUMERAIRE_MARGIN) & (y > self.y_lo + NUMERAIRE_MARGIN)
        else:
            lo_ok = (x >= self.x_lo) & (y >= self.y_lo)
        return lo_ok & (x <= self.x_hi) & (y <= self.y_hi)

    def sample(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        def draw(lo, hi):
            if not math.isfinite(lo):
                lo = hi - 20.0 if math.isfinite(hi) else -10.0
            if not math.isfinite(hi):
                hi = lo + 20.0
            if self.strict_lower:
                lo = lo + 1e-3 * (hi - lo)
            return rng.uniform(lo, hi, n)
        return draw(self.x_lo, self.x_hi), draw(self.y_lo, self.y_hi)


@dataclass(frozen=True)
class TransformSpec:
    variant: str
    params: dict
    s: Callable = field(repr=False)
    t: Callable = field(repr=False)
    h: Callable = field(repr=False)
    inverse: Callable = field(repr=False)
    domain: Domain = field(default_factory=Domain)

    def forward(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (np.asarray(self.s(x, y), dtype=float) + 0 * y,
                np.asarray(self.t(x, y), dtype=float) + 0 * x)

    def weight(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.asarray(self.h(x, y), dtype=float) + 0 * x + 0 * y

    def backward(self, xp, yp):
        xp = np.asarray(xp, dtype=float)
        yp = np.asarray(yp, dtype=float)
        x, y = self.inverse(xp, yp)
        return np.asarray(x, dtype=float) + 0 * yp, np.asarray(y, dtype=float) + 0 * xp

    def to_json(self) -> dict:
        if self.variant == "custom":
            raise ValueError("custom transforms are not serialisable")
        return {"variant": self.variant, "params": dict(self.params)}


def _one(x, y):
    return np.ones_like(np.asarray(x, dtype=float) + np.asarray(y, dtype=float))


def affine(a: float, b: float) -> TransformSpec:
    if a == 0:
        raise ValueError("affine transform needs a != 0")
    return TransformSpec(
        "affine", {"a": a, "b": b},
        s=lambda x, y: a * x + b, t=lambda x, y: a * y + b, h=_one,
        inverse=lambda xp, yp: ((xp - b) / a, (yp - b) / a))


def numeraire(a: float, b: float, c: float) -> TransformSpec:
    if a <= 0 or c <= 0:
        raise ValueError("numeraire transform needs a > 0 and c > 0")
    return TransformSpec(
        "numeraire", {"a": a, "b": b, "c": c},
        s=lambda x, y: a / (x - b), t=lambda x, y: a / (y - b),
        h=lambda x, y: c * (y - b),
        inverse=lambda xp, yp: (a / xp + b, a / yp + b),
        domain=Domain(x_lo=b, y_lo=b, strict_lower=True))


def mirror(flip_x: bool = True, flip_y: bool = False) -> TransformSpec:
    sx = -1.0 if flip_x else 1.0
    sy = -1.0 if flip_y else 1.0
    return TransformSpec(
        "mirror", {"flip_x": flip_x, "flip_y": flip_y},
        s=lambda x, y: sx * x, t=lambda x, y: sy * y, h=_one,
        inverse=lambda xp, yp: (sx * xp, sy * yp))


def custom(s: Callable, t: Callable, h: Callable, inverse: Callable,
           domain: Domain, *, name: str = "custom", check_samples: int = 200,
           seed: int = 0) -> TransformSpec:
    """Transform from user-supplied maps.  The inverse and the positivity of
    h are checked on a random sample of the domain."""
    spec = TransformSpec("custom", {"name": name}, s, t, h, inverse, domain)
    rng = np.random.default_rng(seed)
    x, y = domain.sample(rng, check_samples)
    keep = domain.contains(x, y)
    x, y = x[keep], y[keep]
    xp, yp = spec.forward(x, y)
    xb, yb = spec.backward(xp, yp)
    err = np.max(np.abs(xb - x) / (1 + np.abs(x))) if x.size else 0.0
    err = max(err, np.max(np.abs(yb - y) / (1 + np.abs(y))) if y.size else 0.0)
    if not err <= 1e-9:
        raise ValueError(f"inverse does not invert the map (relative error {err:.3g})")
    if np.any(spec.weight(x, y) <= 0):
        raise ValueError("weight h must be strictly positive on the domain")
    return spec


def compose(outer: TransformSpec, inner: TransformSpec) -> TransformSpec:
    """outer after inner, as a custom spec; weights multiply."""
    def s(x, y):
        return outer.forward(*inner.forward(x, y))[0]

    def t(x, y):
        return outer.forward(*inner.forward(x, y))[1]

    def h(x, y):
        return inner.weight(x, y) * outer.weight(*inner.forward(x, y))

    def inv(xp, yp):
        return inner.backward(*outer.backward(xp, yp))

    return TransformSpec("custom", {"name": f"{outer.variant}*{inner.variant}"},
                         s, t, h, inv, inner.domain)


def from_json(obj: dict) -> TransformSpec:
    variant, p = obj["variant"], obj.get("params", {})
    if variant == "affine":
        return affine(p["a"], p["b"])
    if variant == "numeraire":
        return numeraire(p["a"], p["b"], p["c"])
    if variant == "mirror":
        return mirror(p.get("flip_x", True), p.get("flip_y", False))
    raise ValueError(f"unknown transform variant {variant!r}")


# ---------------------------------------------------------------------------
# action on measures, costs and sets


def _require_domain(spec: TransformSpec, x, y):
    ok = spec.domain.contains(x, y)
    if not np.all(ok):
        i = int(np.argmin(ok))
        raise TransformDomainError(
            f"point ({np.ravel(x)[i]!r}, {np.ravel(y)[i]!r}) outside the domain of {spec.variant}")


def transform_measure(spec: TransformSpec, pi: Coupling) -> Coupling:
    if len(pi) == 0:
        return pi
    _require_domain(spec, pi.xs, pi.ys)
    xp, yp = spec.forward(pi.xs, pi.ys)
    return make_coupling(xp, yp, pi.masses * spec.weight(pi.xs, pi.ys))


def _pull_points(spec: TransformSpec, xp, yp):
    x, y = spec.backward(xp, yp)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise TransformDomainError("image point outside the range of the transform")
    _require_domain(spec, x, y)
    fx, fy = spec.forward(x, y)
    if np.any(np.abs(fx - xp) > 1e-9 * (1 + np.abs(xp))) or \
            np.any(np.abs(fy - yp) > 1e-9 * (1 + np.abs(yp))):
        raise TransformDomainError("image point outside the range of the transform")
    return x, y


def inverse_transform_measure(spec: TransformSpec, pi_prime: Coupling) -> Coupling:
    if len(pi_prime) == 0:
        return pi_prime
    x, y = _pull_points(spec, pi_prime.xs, pi_prime.ys)
    return make_coupling(x, y, pi_prime.masses / spec.weight(x, y))


def transform_cost(spec: TransformSpec, cost: CostFunction) -> CostFunction:
    """c' = (c / h) o T^-1 on the image domain."""
    def fn(xp, yp):
        xp, yp = np.broadcast_arrays(np.asarray(xp, dtype=float), np.asarray(yp, dtype=float))
        x, y = _pull_points(spec, xp, yp)
        return cost(x, y) / spec.weight(x, y)

    params = {"base": cost.family}
    if spec.variant != "custom":
        params["transform"] = spec.to_json()
    return CostFunction("transformed", fn, params)


def transform_support(spec: TransformSpec, xi: SupportSet) -> SupportSet:
    if len(xi) == 0:
        return xi
    x, y = xi.xs(), xi.ys()
    _require_domain(spec, x, y)
    xp, yp = spec.forward(x, y)
    return SupportSet.of(zip(xp, yp))


# ---------------------------------------------------------------------------
# competitor and martingale preservation


@dataclass(frozen=True)
class PreservationCounterexample:
    """Competitors on the image whose pullbacks are not competitors."""

    alpha_image: Coupling
    beta_image: Coupling
    alpha: Coupling
    beta: Coupling
    tag: str
    residual: float

    def to_json(self) -> dict:
        return {"alpha_image": self.alpha_image.to_json(), "beta_image": self.beta_image.to_json(),
                "alpha": self.alpha.to_json(), "beta": self.beta.to_json(),
                "condition": self.tag, "residual": self.residual}


def _canonical_image_pairs(xg: np.ndarray, yg: np.ndarray):
    for x1, x2 in itertools.permutations(xg.tolist(), 2):
        for y1, yl, y2 in itertools.combinations(yg.tolist(), 3):
            yield canonical_pair(x1, x2, y1, yl, y2)


def _wavy(rng: np.random.Generator) -> Callable:
    a = rng.normal(size=4)
    b = rng.normal(scale=2.0, size=(4, 2))
    d = rng.uniform(0, 2 * np.pi, size=4)

    def fn(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return sum(a[i] * np.sin(b[i, 0] * x + b[i, 1] * y + d[i]) for i in range(4))
    return fn


def is_competitor_preserving(spec: TransformSpec, x_grid, y_grid, trials: int = 1000,
                             seed: int = 0, tol: float = 1e-9) -> Verdict:
    """Pull competitor pairs on the image grid back through (T, h) and test C1-C3.

    Canonical three-point pairs are scanned first in lexicographic order,
    then random pairs (random alpha on the grid, beta a minimiser of a random
    smooth objective over its competitors) fill up the ``trials`` budget.
    """
    from .costs import custom as custom_cost

    xg = np.unique(np.asarray(x_grid, dtype=float))
    yg = np.unique(np.asarray(y_grid, dtype=float))
    tested = skipped = 0
    worst = 0.0

    def check(alpha_p, beta_p, label):
        nonlocal tested, worst, skipped
        try:
            alpha = inverse_transform_measure(spec, alpha_p)
            beta = inverse_transform_measure(spec, beta_p)
        except TransformDomainError:
            # the image of a rectangle need not be a rectangle
            skipped += 1
            return None
        tested += 1
        v = verify_C123(alpha, beta, tol)
        worst = max(worst, max(v.extra["residuals"].values()))
        if not v:
            ce = PreservationCounterexample(alpha_p, beta_p, alpha, beta, v.witness,
                                            v.extra["residuals"][v.witness])
            return Verdict(False, ce, f"{label} pair {tested} fails {v.witness}",
                           {"tested": tested, "residuals": v.extra["residuals"]})
        return None

    for alpha_p, beta_p in _canonical_image_pairs(xg, yg):
        if tested >= trials:
            break
        bad = check(alpha_p, beta_p, "canonical")
        if bad is not None:
            return bad
    trial = 0
    while tested < trials and trial < 20 * trials:
        rng = np.random.default_rng([seed, trial])
        trial += 1
        k = int(rng.integers(3, 6))
        xs = rng.choice(xg, size=k)
        ys = rng.choice(yg, size=k)
        alpha_p = make_coupling(xs, ys, rng.uniform(0.1, 1.0, size=k))
        _, beta_p = min_over_competitors(alpha_p, custom_cost(_wavy(rng)))
        bad = check(alpha_p, beta_p, "random")
        if bad is not None:
            return bad
    return Verdict(True, None, f"{tested} pairs preserved",
                   {"tested": tested, "skipped": skipped, "max_residual": worst})


def preserves_martingale(spec: TransformSpec, x_samples, y_samples, tol: float = 1e-9) -> Verdict:
    """Is rho(x, y) = (t(y) - s(x)) h(y) / (y - x) constant in y for every x?"""
    xs = np.asarray(x_samples, dtype=float)
    ys = np.asarray(y_samples, dtype=float)
    for x in xs:
        y = ys[np.abs(ys - x) > 1e-12]
        if y.size < 2:
            continue
        xx = np.full_like(y, x)
        _require_domain(spec, xx, y)
        sp, tp = spec.forward(xx, y)
        rho = (tp - sp) * spec.weight(xx, y) / (y - x)
        if np.any(np.abs(rho - rho[0]) > tol * (1 + np.abs(rho[0]))):
            return Verdict(False, float(x), "ratio varies in y",
                           {"rho_min": float(rho.min()), "rho_max": float(rho.max())})
    return Verdict(True)


def numeraire_mass_check(pi: Coupling, spec: TransformSpec) -> tuple[float, Verdict]:
    """Total mass of the numeraire image, and whether it is a probability.

    The verdict also reports whether 1/c + b matches the mean of the first
    marginal; for martingale couplings the two conditions coincide.
    """
    if spec.variant != "numeraire":
        raise ValueError("numeraire_mass_check needs a numeraire spec")
    mass = transform_measure(spec, pi).total_mass
    mu, _ = marginals(pi)
    mean = barycenter(mu)
    target = 1.0 / spec.params["c"] + spec.params["b"]
    ok = abs(mass - 1.0) <= 1e-9
    return mass, Verdict(ok, None, "", {"mean": mean, "target_mean": target,
                                         "mean_condition": abs(target - mean) <= 1e-9})


# ---------------------------------------------------------------------------
# classification


@dataclass
class Classification:
    case: str
    params: dict
    counterexample: object = None
    detail: str = ""

    @property
    def preserving(self) -> bool:
        return self.case in ("AffineCase", "NumeraireCase")

    def to_json(self) -> dict:
        out = {"case": self.case, "params": self.params, "detail": self.detail}
        ce = self.counterexample
        out["counterexample"] = ce.to_json() if hasattr(ce, "to_json") else ce
        return out


def _fit(design: np.ndarray, values: np.ndarray):
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    resid = float(np.max(np.abs(design @ coef - values)))
    return coef, resid


def classify(spec: TransformSpec, x_grid, y_grid, trials: int = 1000, seed: int = 0,
             tol: float = 1e-9) -> Classification:
    """Decide numerically whether (T, h) is affine, a change of numeraire, or
    neither, using only evaluations of the maps on the grid."""
    xg = np.unique(np.asarray(x_grid, dtype=float))
    yg = np.unique(np.asarray(y_grid, dtype=float))
    X, Y = np.meshgrid(xg, yg, indexing="ij")
    _require_domain(spec, X, Y)
    S, T = spec.forward(X, Y)
    H = spec.weight(X, Y)

    def scale(a):
        return 1.0 + float(np.max(np.abs(a)))

    dep = None
    if np.max(np.ptp(S, axis=1)) > tol * scale(S):
        dep = "s depends on y"
    elif np.max(np.ptp(T, axis=0)) > tol * scale(T):
        dep = "t depends on x"
    elif np.max(np.ptp(H, axis=0)) > tol * scale(H):
        dep = "h depends on x"

    case, params = None, {}
    if dep is None:
        t, h = T[0], H[0]
        ones = np.ones_like(yg)
        if np.ptp(h) <= tol * scale(h):
            coef, r = _fit(np.column_stack([yg, ones]), t)
            if r <= tol * scale(t):
                case = "AffineCase"
                params = {"a": float(coef[0]), "b": float(coef[1]), "h": float(h[0])}
        else:
            (c, cb), rh = _fit(np.column_stack([yg, ones]), h)
            if rh <= tol * scale(h) and c != 0:
                b = -cb / c
                if np.all(yg > b):
                    coef, r = _fit(np.column_stack([1.0 / (yg - b), ones]), t)
                    if r <= tol * scale(t) and coef[0] > 0:
                        case = "NumeraireCase"
                        params = {"a": float(coef[0]), "b": float(b), "c": float(c),
                                  "k": float(coef[1])}

    xi = np.unique(S[:, 0])
    yi = np.unique(T[0])
    check = is_competitor_preserving(spec, xi, yi, trials=trials, seed=seed, tol=tol)
    if case is not None and check:
        return Classification(case, params, None, check.detail)
    detail = dep or ("fitted model rejected by competitor test" if case else "no model fits")
    return Classification("NotPreserving", {"dependence": dep},
                          check.witness if not check else None,
                          detail if check else f"{detail}; {check.detail}")


# ---------------------------------------------------------------------------
# symmetry pipelines


def mirror_measure(m: DiscreteMeasure) -> DiscreteMeasure:
    return make_measure(-m.positions, m.masses)


def solve_mirrored(mu_m: DiscreteMeasure, nu: DiscreteMeasure, cost: CostFunction,
                   sense: str = "min") -> MotSolution:
    """Optimise over couplings of (mu_m, nu) with E[Y | X' = x'] = -x'.

    These are the images of martingale couplings under x -> -x.  Columns are
    ordered by the preimage -x' so the program is laid out like the
    untransformed one.
    """
    order = np.argsort(-mu_m.positions, kind="stable")
    xp = mu_m.positions[order]
    y = nu.positions
    A, b = martingale_constraints(-xp, y, mu_m.masses[order], nu.masses)
    X, Y = np.meshgrid(xp, y, indexing="ij")
    C = np.asarray(cost(X, Y), dtype=float).ravel()
    res = lp_solve(-C if sense == "max" else C, A, b)
    if res.status != OPTIMAL:
        return MotSolution(make_coupling([], [], []), None, res.status)
    value = -res.value if sense == "max" else res.value
    return MotSolution(make_coupling(X.ravel(), Y.ravel(), res.x), float(value), OPTIMAL)


def support_bijection(a: SupportSet, b: SupportSet, tol: float = 1e-9) -> bool:
    if len(a) != len(b):
        return False
    pa = sorted(a)
    pb = sorted(b)
    return all(abs(p[0] - q[0]) <= tol * (1 + abs(p[0])) and abs(p[1] - q[1]) <= tol * (1 + abs(p[1]))
               for p, q in zip(pa, pb))


def numeraire_marginals(spec: TransformSpec, mu: DiscreteMeasure, nu: DiscreteMeasure):
    """Marginals of the numeraire image of any martingale coupling of (mu, nu)."""
    a, b, c = spec.params["a"], spec.params["b"], spec.params["c"]
    mu_p = make_measure(a / (mu.positions - b), c * (mu.positions - b) * mu.masses)
    nu_p = make_measure(a / (nu.positions - b), c * (nu.positions - b) * nu.masses)
    return mu_p, nu_p


def symmetry_pipeline(spec: TransformSpec, mu: DiscreteMeasure, nu: DiscreteMeasure,
                      cost: CostFunction, sense: str = "min") -> dict:
    """Solve the original problem, push the optimiser forward, solve the image
    problem directly, and compare values and supports."""
    original = solve_mot(mu, nu, cost, sense)
    if not original.optimal:
        raise ValueError(f"original problem is {original.status}")
    image = transform_measure(spec, original.coupling)
    cost_p = transform_cost(spec, cost)
    if spec.variant == "mirror" and spec.params["flip_x"] and not spec.params["flip_y"]:
        mu_p = mirror_measure(mu)
        direct = solve_mirrored(mu_p, nu, cost_p, sense)
    elif spec.variant == "numeraire":
        mu_p, nu_p = numeraire_marginals(spec, mu, nu)
        direct = solve_mot(mu_p, nu_p, cost_p, sense)
    elif spec.variant == "affine":
        direct = solve_mot(*(make_measure(spec.params["a"] * m.positions + spec.params["b"],
                                          m.masses) for m in (mu, nu)), cost_p, sense)
    else:
        raise ValueError(f"no direct image problem for variant {spec.variant!r}")
    if not direct.optimal:
        raise ValueError(f"image problem is {direct.status}")
    pushed = transform_support(spec, original.coupling.support())
    value_image = image.integrate(cost_p)
    return {
        "variant": spec.variant,
        "value_original": original.value,
        "value_pushed": value_image,
        "value_direct": direct.value,
        "value_gap": abs(direct.value - original.value),
        "support_match": support_bijection(pushed, direct.coupling.support()),
        "original": original,
        "direct": direct,
    }


# ---------------------------------------------------------------------------
# maps outside the two preserving families, used to probe the classifier


def nonconforming_corpus() -> list[tuple[str, TransformSpec]]:
    """Ten invertible (T, h) pairs on [1, 2]^2 that are neither affine nor a
    change of numeraire."""
    box = Domain(1.0, 2.0, 1.0, 2.0)

    def one(x, y):
        return _one(x, y)

    def pw(y):
        return np.where(y <= 1.5, y, 1.5 + 2.0 * (y - 1.5))

    def pw_inv(v):
        return np.where(v <= 1.5, v, 1.5 + (v - 1.5) / 2.0)

    maps = [
        ("cube", lambda x, y: x, lambda x, y: y ** 3, one, lambda a, b: (a, np.cbrt(b))),
        ("shear", lambda x, y: x, lambda x, y: y + x, one, lambda a, b: (a, b - a)),
        ("square_shift", lambda x, y: x, lambda x, y: y + x ** 2, one, lambda a, b: (a, b - a ** 2)),
        ("exp", lambda x, y: x, lambda x, y: np.exp(y), one, lambda a, b: (a, np.log(b))),
        ("piecewise_affine", lambda x, y: x, lambda x, y: pw(y), one, lambda a, b: (a, pw_inv(b))),
        ("weight_in_x", lambda x, y: x, lambda x, y: y, lambda x, y: 1.0 + x + 0 * y,
         lambda a, b: (a, b)),
        ("weight_in_xy", lambda x, y: x, lambda x, y: y, lambda x, y: 1.0 + x * y,
         lambda a, b: (a, b)),
        ("weight_square", lambda x, y: x, lambda x, y: y, lambda x, y: y ** 2 + 0 * x,
         lambda a, b: (a, b)),
        ("reciprocal_unweighted", lambda x, y: 1.0 / x, lambda x, y: 1.0 / y, one,
         lambda a, b: (1.0 / a, 1.0 / b)),
        ("s_mixes_y", lambda x, y: x + y, lambda x, y: y, one, lambda a, b: (a - b, b)),
    ]
    return [(name, custom(s, t, h, inv, box, name=name)) for name, s, t, h, inv in maps]
