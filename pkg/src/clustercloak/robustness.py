"""Rebuild probability and surplus-member bookkeeping for a single cluster."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


@dataclass(frozen=True, slots=True)
class RobustnessState:
    p_need: Fraction
    n_ex: int
    feasible: bool


def compute_robustness(m: int, ks: Sequence[int]) -> RobustnessState:
    """Derive ``(p_need, n_ex, feasible)`` from the cluster size and sorted anonymity levels.

    With ``k_m`` the largest level and ``k_{m-1}`` the runner-up:

    * ``m > k_m``: any single departure keeps the cluster valid.
    * ``m == k_m`` with a unique maximum: only the departure of the top
      user is harmless, so a rebuild is needed with probability ``(m-1)/m``.
    * ``m == k_m`` with a shared maximum: every departure forces a rebuild.
    * ``m < k_m``: the cluster is infeasible.

    ``p_need`` is returned as an exact fraction.
    """
    if m < 1 or len(ks) != m:
        raise ValueError(f"need m == len(ks) >= 1, got m={m}, len(ks)={len(ks)}")
    if any(a > b for a, b in zip(ks, ks[1:])):
        raise ValueError("anonymity levels must be sorted ascending")
    k_max = ks[-1]
    if m > k_max:
        return RobustnessState(Fraction(0), m - k_max, True)
    if m < k_max:
        return RobustnessState(Fraction(1), 0, False)
    if m > 1 and ks[-2] == k_max:
        return RobustnessState(Fraction(1), 0, True)
    return RobustnessState(Fraction(m - 1, m), 0, True)
