"""Max-min fair IOPS allocation and capacity degradation.

Allocations use exact rational arithmetic so that repeated runs and
independent implementations agree bit for bit; callers convert to float
only at presentation time.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Union

from .errors import ConfigError, InputError

IopsValue = Union[int, float, Fraction]


def _as_fraction(value: IopsValue, what: str) -> Fraction:
    try:
        frac = Fraction(value)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{what}: {value!r} is not a number") from exc
    if frac < 0:
        raise InputError(f"{what}: must be >= 0, got {value!r}")
    return frac


def allocate_iops(
    demands: Mapping[str, IopsValue],
    caps: Mapping[str, IopsValue] | None,
    capacity: IopsValue,
) -> dict[str, Fraction]:
    """Split `capacity` across volumes max-min fairly.

    A volume's effective demand is min(demand, cap) when a cap is present.
    Volumes are served in ascending effective-demand order: each takes
    either its full effective demand or an equal share of what is left,
    whichever is smaller, so nobody can gain except at the expense of a
    volume that already holds as much or less.
    """
    cap_map = caps or {}
    water = Fraction(_as_fraction(capacity, "capacity"))
    eff: dict[str, Fraction] = {}
    for volume_id, demand in demands.items():
        want = _as_fraction(demand, f"demand[{volume_id}]")
        if volume_id in cap_map:
            want = min(want, _as_fraction(cap_map[volume_id], f"cap[{volume_id}]"))
        eff[volume_id] = want

    alloc: dict[str, Fraction] = {v: Fraction(0) for v in demands}
    pending = sorted(eff, key=lambda v: (eff[v], v))
    remaining = water
    left = len(pending)
    for volume_id in pending:
        share = remaining / left
        grant = min(eff[volume_id], share)
        alloc[volume_id] = grant
        remaining -= grant
        left -= 1
    return alloc


def capacity_degradation(total_iops_budget: int, factor: IopsValue | str) -> int:
    """Scale a budget by a degradation factor in (0, 1], rounding down.

    Factors given as floats or strings are interpreted through their
    decimal literal (0.45 means exactly 45/100), keeping the floor free
    of binary rounding surprises.
    """
    if isinstance(factor, float):
        frac = Fraction(str(factor))
    elif isinstance(factor, str):
        try:
            frac = Fraction(factor)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"degradation factor {factor!r} is not a number") from exc
    else:
        frac = Fraction(factor)
    if not 0 < frac <= 1:
        raise ConfigError(f"degradation factor must be in (0, 1], got {factor!r}")
    if total_iops_budget < 0:
        raise InputError(f"total_iops_budget must be >= 0, got {total_iops_budget}")
    return int(total_iops_budget * frac)
