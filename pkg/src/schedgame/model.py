"""Core domain model: loads, scenarios, schedules, profiles, pricing and billing.

All quantities are exact rationals (`fractions.Fraction`). Floating point
never enters any computation that feeds an equilibrium decision; rounding
happens only when values are formatted for display or serialization.

Slots are 1-based: a scenario with horizon H has slots 1..H.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

Rational = Union[int, str, Fraction]

#: Reserved owner index for unowned base demand (e.g. aggregate fixed loads
#: that belong to no player). Background energy participates in pricing and
#: in total cost but never acts in the game.
BACKGROUND = 0


class SchedGameError(Exception):
    """Base class for domain errors."""


class InfeasibleStartError(SchedGameError):
    """A load was placed at a start it cannot occupy."""


class ScheduleMismatchError(SchedGameError):
    """A joint schedule does not correspond to the scenario's shiftable loads."""


class CapExceededError(SchedGameError):
    """An enumeration exceeded its configured size cap."""


def as_fraction(value: Rational) -> Fraction:
    """Convert an int, Fraction, or exact string ("2/3", "0.67") to Fraction.

    Floats are rejected: they silently lose exactness and every quantity in
    this package is contractually exact.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"exact rational required, got {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def round_half_away(value: Fraction, places: int = 2) -> Fraction:
    """Round to `places` decimals, halves away from zero (display convention)."""
    q = 10**places
    scaled = value * q
    whole, rem = divmod(abs(scaled.numerator), scaled.denominator)
    if 2 * rem >= scaled.denominator:
        whole += 1
    signed = whole if scaled >= 0 else -whole
    return Fraction(signed, q)


def format_fraction(value: Fraction, places: int = 2) -> str:
    """Fixed-point decimal string of `value` rounded half away from zero."""
    r = round_half_away(value, places)
    sign = "-" if r < 0 else ""
    q = 10**places
    n = abs(r.numerator) * (q // r.denominator)
    whole, frac = divmod(n, q)
    if places == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{places}d}"


@dataclass(frozen=True, order=True)
class Money:
    """An exact amount in cents. Rounds only when formatted."""

    cents: Fraction

    @staticmethod
    def of(value: Rational) -> "Money":
        return Money(as_fraction(value))

    def __add__(self, other: "Money") -> "Money":
        return Money(self.cents + other.cents)

    def __sub__(self, other: "Money") -> "Money":
        return Money(self.cents - other.cents)

    def rounded(self, places: int = 2) -> Fraction:
        return round_half_away(self.cents, places)

    def __str__(self) -> str:
        return format_fraction(self.cents)


class LoadKind(enum.Enum):
    FIXED = "fixed"
    SHIFTABLE = "shiftable"


class BillingScheme(enum.Enum):
    #: Per-slot split: each user pays their share of every slot's demand
    #: times the price of that slot's total.
    HOURLY_PROPORTIONAL = "hourly"
    #: Whole-day split: each user pays their share of total daily energy
    #: times the day's total cost. Makes the game purely cooperative.
    DAILY_PROPORTIONAL = "daily"


@dataclass(frozen=True)
class PricingFunction:
    """Strictly convex price of one slot's total energy, in cents.

    `coefficients[i]` multiplies x**(i + 1); there is no constant term, so
    C(0) = 0 by construction. `kind` is "quadratic" for the single-coefficient
    a*x**2 form and "polynomial" otherwise.
    """

    kind: str
    coefficients: tuple[Fraction, ...]

    @staticmethod
    def quadratic(a: Rational = 1) -> "PricingFunction":
        return PricingFunction("quadratic", (Fraction(0), as_fraction(a)))

    @staticmethod
    def polynomial(coefficients: Iterable[Rational]) -> "PricingFunction":
        return PricingFunction(
            "polynomial", tuple(as_fraction(c) for c in coefficients)
        )

    def __call__(self, x: Fraction) -> Fraction:
        total = Fraction(0)
        power = x
        for c in self.coefficients:
            if c:
                total += c * power
            power *= x
        return total

    def violations(self) -> list[str]:
        out = []
        if any(c < 0 for c in self.coefficients):
            out.append("pricing coefficients must be nonnegative")
        if not any(c > 0 for c in self.coefficients):
            out.append("pricing must be strictly increasing (no positive term)")
        if not any(
            c > 0 for power, c in enumerate(self.coefficients, start=1) if power >= 2
        ):
            out.append("pricing must be strictly convex (no term of degree >= 2)")
        return out


@dataclass(frozen=True)
class Load:
    """One appliance demand.

    rate is kWh consumed in each occupied slot; duration is the number of
    consecutive slots; window [start, end] (inclusive, 1-based) bounds the
    occupancy for non-wrapping placement. A fixed load's window pins it
    exactly (window length == duration).
    """

    id: str
    owner: int
    rate: Fraction
    duration: int
    window: tuple[int, int]
    kind: LoadKind

    @property
    def energy(self) -> Fraction:
        return self.rate * self.duration

    def feasible_starts(self, horizon: int, wrap: bool) -> tuple[int, ...]:
        """All starts this load may take, ascending.

        With wrap enabled and a full-day window, every slot is a feasible
        start (the tail loops to the start of the day). A narrower window
        confines the occupancy, so wrap does not widen it.
        """
        lo, hi = self.window
        if self.kind is LoadKind.FIXED:
            return (lo,)
        if wrap and lo == 1 and hi == horizon:
            return tuple(range(1, horizon + 1))
        return tuple(range(lo, hi - self.duration + 2))


def occupied_slots(
    load: Load, start: int, horizon: int, wrap: bool
) -> frozenset[int]:
    """Slots occupied by `load` when switched on at `start`.

    Wrapping placement loops past the end of the day into slots 1, 2, ...;
    otherwise the run must fit inside the day.
    """
    if wrap:
        return frozenset(
            ((start - 1 + i) % horizon) + 1 for i in range(load.duration)
        )
    end = start + load.duration - 1
    if end > horizon or end > load.window[1]:
        raise InfeasibleStartError(
            f"load {load.id}: start {start} overflows window"
            f" [{load.window[0]}, {load.window[1]}] without wrap"
        )
    return frozenset(range(start, end + 1))


@dataclass(frozen=True)
class Scenario:
    horizon: int
    users: int
    loads: tuple[Load, ...]
    pricing: PricingFunction
    billing: BillingScheme
    wrap_allowed: bool

    def shiftable_loads(self) -> tuple[Load, ...]:
        """Schedulable loads in canonical (id-sorted) order."""
        return tuple(
            sorted(
                (l for l in self.loads if l.kind is LoadKind.SHIFTABLE),
                key=lambda l: l.id,
            )
        )

    def loads_of(self, user: int) -> tuple[Load, ...]:
        return tuple(l for l in self.loads if l.owner == user)

    def user_energy(self, user: int) -> Fraction:
        return sum((l.energy for l in self.loads_of(user)), Fraction(0))

    def total_energy(self) -> Fraction:
        return sum((l.energy for l in self.loads), Fraction(0))

    def load_by_id(self, load_id: str) -> Load:
        for l in self.loads:
            if l.id == load_id:
                return l
        raise KeyError(load_id)

    def with_billing(self, billing: BillingScheme) -> "Scenario":
        return Scenario(
            self.horizon, self.users, self.loads, self.pricing, billing,
            self.wrap_allowed,
        )


@dataclass(frozen=True)
class JointSchedule:
    """Start slot of every shiftable load; the joint action of the game.

    Stored as an id-sorted tuple of (load id, start) pairs so schedules are
    hashable and compare canonically.
    """

    starts: tuple[tuple[str, int], ...]

    @staticmethod
    def of(mapping: Mapping[str, int]) -> "JointSchedule":
        return JointSchedule(tuple(sorted(mapping.items())))

    def as_dict(self) -> dict[str, int]:
        return dict(self.starts)

    def start_of(self, load_id: str) -> int:
        for lid, s in self.starts:
            if lid == load_id:
                return s
        raise KeyError(load_id)

    def moved(self, load_id: str, start: int) -> "JointSchedule":
        return JointSchedule(
            tuple((lid, start if lid == load_id else s) for lid, s in self.starts)
        )


@dataclass(frozen=True)
class LoadProfile:
    """Aggregate energy per slot, kWh."""

    energy: tuple[Fraction, ...]

    def at(self, slot: int) -> Fraction:
        return self.energy[slot - 1]

    def total(self) -> Fraction:
        return sum(self.energy, Fraction(0))

    def peak(self) -> Fraction:
        return max(self.energy)


@dataclass(frozen=True)
class Violation:
    load_id: str | None
    reason: str

    def __str__(self) -> str:
        prefix = f"{self.load_id}: " if self.load_id else ""
        return prefix + self.reason


def validate_scenario(scenario: Scenario) -> list[Violation]:
    """Every invariant violation in the scenario; empty list means valid.

    Violations are data, not faults: a malformed scenario is an expected
    input (e.g. from a hand-written file) and the caller decides how to
    report it.
    """
    out: list[Violation] = []
    s = scenario
    if s.horizon < 1:
        out.append(Violation(None, f"horizon must be >= 1, got {s.horizon}"))
        return out
    if s.users < 1:
        out.append(Violation(None, f"user count must be >= 1, got {s.users}"))
    for reason in s.pricing.violations():
        out.append(Violation(None, reason))
    seen: set[str] = set()
    for l in s.loads:
        if l.id in seen:
            out.append(Violation(l.id, "duplicate load id"))
        seen.add(l.id)
        if not (l.owner == BACKGROUND or 1 <= l.owner <= s.users):
            out.append(Violation(l.id, f"owner {l.owner} outside 1..{s.users}"))
        if l.rate <= 0:
            out.append(Violation(l.id, f"rate must be positive, got {l.rate}"))
        if not 1 <= l.duration <= s.horizon:
            out.append(
                Violation(l.id, f"duration {l.duration} outside 1..{s.horizon}")
            )
        lo, hi = l.window
        if not (1 <= lo <= hi <= s.horizon):
            out.append(
                Violation(l.id, f"window [{lo}, {hi}] outside day [1, {s.horizon}]")
            )
            continue
        if l.kind is LoadKind.FIXED and hi - lo + 1 != l.duration:
            out.append(
                Violation(
                    l.id,
                    f"fixed load window length {hi - lo + 1} != duration"
                    f" {l.duration}",
                )
            )
        if l.kind is LoadKind.SHIFTABLE and not l.feasible_starts(
            s.horizon, s.wrap_allowed
        ):
            out.append(Violation(l.id, "no feasible start in window"))
    if not any(l.kind is LoadKind.SHIFTABLE for l in s.loads):
        out.append(Violation(None, "scenario has no shiftable load"))
    return out


def validate_schedule(scenario: Scenario, schedule: JointSchedule) -> None:
    """Raise unless `schedule` assigns a feasible start to exactly the
    scenario's shiftable loads."""
    expected = {l.id for l in scenario.shiftable_loads()}
    got = {lid for lid, _ in schedule.starts}
    if expected != got:
        raise ScheduleMismatchError(
            f"schedule covers {sorted(got)}, scenario needs {sorted(expected)}"
        )
    for l in scenario.shiftable_loads():
        start = schedule.start_of(l.id)
        if start not in l.feasible_starts(scenario.horizon, scenario.wrap_allowed):
            raise InfeasibleStartError(
                f"load {l.id}: start {start} not feasible"
            )


def expand(
    scenario: Scenario, schedule: JointSchedule
) -> tuple[list[LoadProfile], LoadProfile]:
    """Realize a joint schedule as per-user profiles and the aggregate.

    Returns (per_user, aggregate): per_user[k - 1] is user k's own profile
    including their fixed loads; the aggregate additionally contains
    background loads. Energy is conserved: the aggregate totals the sum of
    all load energies regardless of the schedule.
    """
    validate_schedule(scenario, schedule)
    H = scenario.horizon
    per_user = [[Fraction(0)] * H for _ in range(scenario.users)]
    background = [Fraction(0)] * H
    for l in scenario.loads:
        if l.kind is LoadKind.SHIFTABLE:
            start = schedule.start_of(l.id)
        else:
            start = l.window[0]
        slots = occupied_slots(l, start, H, scenario.wrap_allowed)
        target = background if l.owner == BACKGROUND else per_user[l.owner - 1]
        for h in slots:
            target[h - 1] += l.rate
    aggregate = [
        sum((row[h] for row in per_user), background[h]) for h in range(H)
    ]
    return (
        [LoadProfile(tuple(row)) for row in per_user],
        LoadProfile(tuple(aggregate)),
    )


def total_cost(profile: LoadProfile, pricing: PricingFunction) -> Money:
    """Whole-day cost of a profile: the price of each slot's total, summed."""
    return Money(sum((pricing(x) for x in profile.energy), Fraction(0)))


def user_bill_hourly(
    scenario: Scenario, schedule: JointSchedule, user: int
) -> Money:
    """Per-slot proportional bill.

    In each slot the user pays their share of that slot's demand times the
    price of the slot total. Empty slots (total 0) contribute nothing; the
    0/0 share is taken as 0, the only consistent continuous extension.
    """
    per_user, aggregate = expand(scenario, schedule)
    own = per_user[user - 1]
    cents = Fraction(0)
    for x_own, x_all in zip(own.energy, aggregate.energy):
        if x_all:
            cents += x_own / x_all * scenario.pricing(x_all)
    return Money(cents)


def user_bill_daily(
    scenario: Scenario, schedule: JointSchedule, user: int
) -> Money:
    """Whole-day proportional bill.

    The user pays their share of total daily energy (background included in
    the denominator) times the day's total cost. Every user's bill is then a
    fixed fraction of total cost, so all users rank outcomes identically.
    """
    total_e = scenario.total_energy()
    if total_e == 0:
        raise SchedGameError("daily bill undefined: zero total energy")
    _, aggregate = expand(scenario, schedule)
    share = scenario.user_energy(user) / total_e
    return Money(share * total_cost(aggregate, scenario.pricing).cents)


def user_bill(scenario: Scenario, schedule: JointSchedule, user: int) -> Money:
    if scenario.billing is BillingScheme.DAILY_PROPORTIONAL:
        return user_bill_daily(scenario, schedule, user)
    return user_bill_hourly(scenario, schedule, user)


def par(profile: LoadProfile) -> Fraction:
    """Peak-to-average ratio: max slot energy over the all-slot mean.

    The mean includes empty slots; a flat profile has PAR exactly 1.
    """
    total = profile.total()
    if total == 0:
        raise SchedGameError("PAR undefined for an all-zero profile")
    mean = Fraction(total, len(profile.energy))
    return profile.peak() / mean
