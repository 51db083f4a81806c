"""Stop-go comparisons of two stopped paths with a common endpoint.

For stopped paths (f, s) and (g, t) ending at the same point y, continuing f
for a further random time sigma while stopping g is compared with the
reverse.  Only functionals of (start, end) are supported, so the
continuation enters through W = B_sigma alone:

    gap = E[gamma(f0, y + W)] - gamma(f0, y) - E[gamma(g0, y + W)] + gamma(g0, y)

A positive gap means swapping the roles strictly helps the path that
continued, i.e. the pair is stop-go for this sigma.  Two families of sigma
are available, both with a closed-form law of W on the lattice:

* fixed_steps k:   W = delta * (2 Bin(k, 1/2) - k),  E[sigma] = k delta^2
* exit_radius r:   first exit of (-R, R) steps, R = r / delta,
                   W = +-R delta,  E[sigma] = R^2 delta^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..costs import CostFunction
from .lattice import Lattice

VERDICTS = ("SG", "SG2", "neither")


@dataclass(frozen=True)
class StoppedPath:
    start: float
    end: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValueError("stopped path endpoints must be finite")


@dataclass(frozen=True)
class PathFunctional:
    family: str
    cost: CostFunction | None = None

    def __post_init__(self):
        if self.family not in ("terminal_cost", "abs_diff_neg", "abs_cubed"):
            raise ValueError(f"unknown path functional {self.family!r}")
        if self.family == "terminal_cost" and self.cost is None:
            raise ValueError("terminal_cost needs a cost function")

    @classmethod
    def terminal_cost(cls, c: CostFunction) -> "PathFunctional":
        return cls("terminal_cost", c)

    @classmethod
    def abs_diff_neg(cls) -> "PathFunctional":
        return cls("abs_diff_neg")

    @classmethod
    def abs_cubed(cls) -> "PathFunctional":
        return cls("abs_cubed")

    def __call__(self, start, end):
        start = np.asarray(start, dtype=float)
        end = np.asarray(end, dtype=float)
        if self.family == "terminal_cost":
            return np.asarray(self.cost(start, end), dtype=float)
        if self.family == "abs_diff_neg":
            return -np.abs(end - start)
        return np.abs(end - start) ** 3

    def to_json(self) -> dict:
        out = {"family": self.family}
        if self.cost is not None:
            out["cost"] = self.cost.to_json()
        return out


@dataclass(frozen=True)
class Sigma:
    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("fixed_steps", "exit_radius"):
            raise ValueError(f"unknown sigma kind {self.kind!r}")
        if not self.value > 0:
            raise ValueError("sigma needs a positive step count or radius")

    @classmethod
    def fixed_steps(cls, k: int) -> "Sigma":
        return cls("fixed_steps", int(k))

    @classmethod
    def exit_radius(cls, r: float) -> "Sigma":
        return cls("exit_radius", float(r))

    def radius_steps(self, lattice: Lattice) -> int:
        R = int(round(self.value / lattice.delta))
        if R < 1:
            raise ValueError("exit radius is below one lattice step")
        return R

    def expected(self, lattice: Lattice) -> float:
        if self.kind == "fixed_steps":
            return int(self.value) * lattice.delta ** 2
        return self.radius_steps(lattice) ** 2 * lattice.delta ** 2

    def sample(self, lattice: Lattice, n: int, rng: np.random.Generator) -> np.ndarray:
        """n independent draws of B_sigma."""
        if self.kind == "fixed_steps":
            k = int(self.value)
            return lattice.delta * (2.0 * rng.binomial(k, 0.5, size=n) - k)
        R = self.radius_steps(lattice)
        return lattice.delta * R * (2.0 * rng.integers(0, 2, size=n) - 1)

    def describe(self) -> str:
        if self.kind == "fixed_steps":
            return f"fixed_steps k={int(self.value)}"
        return f"exit_radius r={self.value:g}"


@dataclass(frozen=True)
class StopGoResult:
    verdict: str
    gap: float
    stderr: float
    exact_gap: float | None
    expected_sigma: float
    gap2: float | None
    stderr2: float | None
    n_samples: int
    budget: str

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "gap": self.gap,
            "stderr": self.stderr,
            "exact_gap": self.exact_gap,
            "expected_sigma": self.expected_sigma,
            "gap2": self.gap2,
            "stderr2": self.stderr2,
            "n_samples": self.n_samples,
            "budget": self.budget,
        }


def _gap_samples(gamma: PathFunctional, f: StoppedPath, g: StoppedPath, W: np.ndarray) -> np.ndarray:
    y = f.end
    return ((gamma(f.start, y + W) - gamma(f.start, y))
            - (gamma(g.start, y + W) - gamma(g.start, y)))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size < 2:
        return float(x.mean()), math.inf
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _closed_form(gamma: PathFunctional, f: StoppedPath, g: StoppedPath, e_sigma: float):
    # for c(x, y) = -x y^2: E[c(x, y + W)] - c(x, y) = -x E[W^2] = -x E[sigma]
    if gamma.family == "terminal_cost" and gamma.cost.family == "sm_neg":
        return (g.start - f.start) * e_sigma
    return None


def _significant(value: float, se: float, scale: float) -> bool:
    return value > max(3.0 * se, 1e-12 * scale)


def check_stop_go(f: StoppedPath, g: StoppedPath, gamma: PathFunctional,
                  gamma2: PathFunctional | None = None, sigma: Sigma | None = None,
                  lattice: Lattice | None = None, n_samples: int = 10_000,
                  seed: int | None = None) -> StopGoResult:
    """Stop-go verdict for one continuation time ``sigma``.

    Both sides are estimated with the same draws of W.  When gamma has a
    closed form the verdict uses the exact gap; the Monte Carlo estimate is
    still reported.  Only the single sigma given is checked, so "SG" means
    the inequality holds for that sigma, not for every stopping time.
    """
    if sigma is None or lattice is None:
        raise ValueError("check_stop_go needs a sigma and a lattice")
    if abs(f.end - g.end) > 1e-12 * max(1.0, abs(f.end)):
        raise ValueError(f"stopped paths must share their endpoint (got {f.end!r} and {g.end!r})")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(lattice.seed if seed is None else seed)
    W = sigma.sample(lattice, n_samples, rng)
    e_sigma = sigma.expected(lattice)
    samples = _gap_samples(gamma, f, g, W)
    gap, se = _mean_se(samples)
    exact = _closed_form(gamma, f, g, e_sigma)
    scale = 1.0 + float(np.max(np.abs(gamma(np.array([f.start, g.start]), f.end + W[:1000, None]))))

    gap2 = se2 = None
    if exact is not None:
        decide, noise = exact, 0.0
    else:
        decide, noise = gap, se
    if _significant(decide, noise, scale):
        verdict = "SG"
    elif abs(decide) <= max(3.0 * noise, 1e-12 * scale) and gamma2 is not None:
        gap2, se2 = _mean_se(_gap_samples(gamma2, f, g, W))
        scale2 = 1.0 + float(np.max(np.abs(gamma2(np.array([f.start, g.start]),
                                                  f.end + W[:1000, None]))))
        verdict = "SG2" if _significant(gap2, se2, scale2) else "neither"
    else:
        verdict = "neither"
    return StopGoResult(verdict, gap, se, exact, e_sigma, gap2, se2, n_samples,
                        f"one stopping time checked: {sigma.describe()}")
