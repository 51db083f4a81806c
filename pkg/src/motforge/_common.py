"""Small shared helpers: verdict objects and tolerance constants."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

# Atom positions closer than this are the same atom.
POSITION_TOL = 1e-12
# Mass above which a coupling entry counts as support.
SUPPORT_THRESHOLD = 1e-9


@dataclass(frozen=True)
class Verdict:
    """Boolean outcome of a check, optionally carrying a witness.

    Truthiness follows ``ok`` so verdicts can be used directly in
    ``if``/``assert`` statements.
    """

    ok: bool
    witness: Any = None
    detail: str = ""
    extra: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.ok)


def same_position(a: float, b: float, tol: float = POSITION_TOL) -> bool:
    return abs(a - b) <= tol
