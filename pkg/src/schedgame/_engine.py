"""Internal exact evaluation engine.

Scales every rate by the least common denominator so slot energies become
integers, and folds the pricing polynomial's rational coefficients into a
single integer-valued key: cost_key(profile) = D * total_cost_cents and
bill_key(user) = D * hourly_bill_cents for one shared integer D. All
comparisons made by the game operations are therefore exact integer
comparisons; cents are recovered as Fraction(key, D) only at the edges.

Everything here treats slots as 0-based indexes; the public modules convert
to the 1-based domain convention.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

from .model import (
    BACKGROUND,
    BillingScheme,
    JointSchedule,
    Load,
    LoadKind,
    Money,
    Scenario,
    SchedGameError,
    validate_scenario,
)


class Engine:
    def __init__(self, scenario: Scenario):
        problems = validate_scenario(scenario)
        if problems:
            raise SchedGameError(
                "invalid scenario: " + "; ".join(str(p) for p in problems)
            )
        self.scenario = scenario
        H = scenario.horizon
        self.H = H

        loads = scenario.shiftable_loads()
        self.loads = loads
        self.n = len(loads)
        self.load_ids = tuple(l.id for l in loads)
        self.owners = tuple(l.owner for l in loads)

        scale = lcm(*(l.rate.denominator for l in scenario.loads))
        self.scale = scale

        # Base profile: fixed and background loads, which never move.
        base = [0] * H
        base_own: dict[int, list[int]] = {
            k: [0] * H for k in range(1, scenario.users + 1)
        }
        for l in scenario.loads:
            if l.kind is not LoadKind.FIXED:
                continue
            r = int(l.rate * scale)
            for h in range(l.window[0] - 1, l.window[1]):
                base[h] += r
                if l.owner != BACKGROUND:
                    base_own[l.owner][h] += r
        self.base = tuple(base)
        self.base_own = {k: tuple(v) for k, v in base_own.items()}

        # Per shiftable load: integer rate, feasible starts, occupancy
        # (0-based slot tuples) per feasible start.
        self.rates = tuple(int(l.rate * scale) for l in loads)
        self.starts: list[tuple[int, ...]] = []
        self.occ: list[dict[int, tuple[int, ...]]] = []
        wrap = scenario.wrap_allowed
        for l in loads:
            feas = l.feasible_starts(H, wrap)
            self.starts.append(feas)
            occ_by_start = {}
            for s in feas:
                if wrap:
                    occ_by_start[s] = tuple(
                        (s - 1 + i) % H for i in range(l.duration)
                    )
                else:
                    occ_by_start[s] = tuple(range(s - 1, s - 1 + l.duration))
            self.occ.append(occ_by_start)

        self.user_loads: dict[int, list[int]] = {
            k: [] for k in range(1, scenario.users + 1)
        }
        for i, l in enumerate(loads):
            self.user_loads[l.owner].append(i)

        # Pricing: C(x) = sum_p c_p x^p with x = z / scale. Then
        # slot cost = sum_p (c_p / scale^p) z^p, and with D the common
        # denominator of those rational factors,
        #   D * slot cost = sum_p n_p z^p                (integer)
        #   D * slot bill weight = sum_p n_p z^(p-1)     (integer)
        coeffs = scenario.pricing.coefficients
        factors = [
            c / Fraction(scale) ** p for p, c in enumerate(coeffs, start=1)
        ]
        D = lcm(*(f.denominator for f in factors)) if factors else 1
        self.denom = D
        self.poly = tuple(int(f * D) for f in factors)

        self.daily = scenario.billing is BillingScheme.DAILY_PROPORTIONAL
        total_e = scenario.total_energy()
        self.daily_share = {
            k: (scenario.user_energy(k) / total_e) if total_e else Fraction(0)
            for k in range(1, scenario.users + 1)
        }

    # -- integer kernels ---------------------------------------------------

    def slot_cost(self, z: int) -> int:
        """D * price of one slot holding integer energy z."""
        total = 0
        power = z
        for n_p in self.poly:
            if n_p:
                total += n_p * power
            power *= z
        return total

    def slot_weight(self, z: int) -> int:
        """D * marginal bill weight of a slot: slot_cost(z) / z for z > 0."""
        total = 0
        power = 1
        for n_p in self.poly:
            if n_p:
                total += n_p * power
            power *= z
        return total

    def cost_key(self, profile: list[int]) -> int:
        slot_cost = self.slot_cost
        return sum(slot_cost(z) for z in profile)

    def hourly_bill_key(self, profile: list[int], own: list[int]) -> int:
        slot_weight = self.slot_weight
        return sum(o * slot_weight(z) for o, z in zip(own, profile) if o)

    def cents(self, key: int) -> Fraction:
        return Fraction(key, self.denom)

    # -- schedule plumbing ---------------------------------------------------

    def starts_vec(self, schedule: JointSchedule) -> list[int]:
        d = schedule.as_dict()
        if set(d) != set(self.load_ids):
            raise SchedGameError("schedule does not match scenario loads")
        return [d[lid] for lid in self.load_ids]

    def schedule(self, starts: list[int]) -> JointSchedule:
        return JointSchedule.of(dict(zip(self.load_ids, starts)))

    def profile(self, starts: list[int]) -> list[int]:
        z = list(self.base)
        for i, s in enumerate(starts):
            r = self.rates[i]
            for h in self.occ[i][s]:
                z[h] += r
        return z

    def own_profile(self, user: int, starts: list[int]) -> list[int]:
        own = list(self.base_own[user])
        for i in self.user_loads[user]:
            r = self.rates[i]
            for h in self.occ[i][starts[i]]:
                own[h] += r
        return own

    def total_cost_cents(self, starts: list[int]) -> Fraction:
        return self.cents(self.cost_key(self.profile(starts)))

    def bill_cents(self, user: int, starts: list[int]) -> Fraction:
        if self.daily:
            return self.daily_share[user] * self.total_cost_cents(starts)
        z = self.profile(starts)
        own = self.own_profile(user, starts)
        return self.cents(self.hourly_bill_key(z, own))

    def bill_money(self, user: int, starts: list[int]) -> Money:
        return Money(self.bill_cents(user, starts))

    # -- single-load deviations ----------------------------------------------

    def placement_keys(
        self, profile: list[int], starts: list[int], i: int, user: int
    ) -> dict[int, int]:
        """Bill key the owner would see for each feasible start of load i.

        Under the whole-day split every user's bill is a positive constant
        times total cost, so the comparable key is the cost key itself.
        `profile` must match `starts`; neither is modified.
        """
        r = self.rates[i]
        occ = self.occ[i]
        cur = starts[i]
        z = profile
        slot_cost = self.slot_cost
        out: dict[int, int] = {}
        if self.daily:
            # cost key with load i removed, recomputed only where it sat
            removed_delta = 0
            for h in occ[cur]:
                removed_delta += slot_cost(z[h] - r) - slot_cost(z[h])
            base_key = self.cost_key(z) + removed_delta
            for s, slots in occ.items():
                add = 0
                if s == cur:
                    for h in slots:
                        add += slot_cost(z[h]) - slot_cost(z[h] - r)
                else:
                    for h in slots:
                        zh = z[h] - (r if h in occ[cur] else 0)
                        add += slot_cost(zh + r) - slot_cost(zh)
                out[s] = base_key + add
            return out

        own = self.own_profile(user, starts)
        slot_weight = self.slot_weight
        # strip load i out of both the aggregate and the owner's profile
        zz = list(z)
        oo = list(own)
        for h in occ[cur]:
            zz[h] -= r
            oo[h] -= r
        rest = sum(o * slot_weight(v) for o, v in zip(oo, zz) if o)
        for s, slots in occ.items():
            key = rest
            for h in slots:
                zh, oh = zz[h], oo[h]
                key += (oh + r) * slot_weight(zh + r)
                if oh:
                    key -= oh * slot_weight(zh)
            out[s] = key
        return out

    def best_start(
        self, profile: list[int], starts: list[int], i: int
    ) -> tuple[int, bool]:
        """Best response of load i alone: (chosen start, changed?).

        Keeps the current start on ties; otherwise takes the lowest start
        achieving the minimum.
        """
        user = self.owners[i]
        keys = self.placement_keys(profile, starts, i, user)
        cur = starts[i]
        best = min(keys.values())
        if keys[cur] == best:
            return cur, False
        for s in self.starts[i]:
            if keys[s] == best:
                return s, True
        raise AssertionError("unreachable")

    def move(self, profile: list[int], starts: list[int], i: int, s: int) -> None:
        """Apply load i -> start s in place."""
        r = self.rates[i]
        for h in self.occ[i][starts[i]]:
            profile[h] -= r
        for h in self.occ[i][s]:
            profile[h] += r
        starts[i] = s

    # -- per-user best response ------------------------------------------------

    def best_response_user(
        self,
        profile: list[int],
        starts: list[int],
        user: int,
        sweep_cap: int = 100,
    ) -> list[tuple[int, int, int]]:
        """Re-schedule all of `user`'s loads against the rest, in place.

        One load: exact minimization. Several: coordinate descent, sweeping
        the user's loads in canonical order until a full sweep changes
        nothing. Returns the applied moves as (load index, old, new).
        """
        indices = self.user_loads[user]
        if not indices:
            raise SchedGameError(f"user {user} owns no shiftable load")
        moves: list[tuple[int, int, int]] = []
        if len(indices) == 1:
            i = indices[0]
            s, changed = self.best_start(profile, starts, i)
            if changed:
                moves.append((i, starts[i], s))
                self.move(profile, starts, i, s)
            return moves
        for _ in range(sweep_cap):
            dirty = False
            for i in indices:
                s, changed = self.best_start(profile, starts, i)
                if changed:
                    moves.append((i, starts[i], s))
                    self.move(profile, starts, i, s)
                    dirty = True
            if not dirty:
                return moves
        raise SchedGameError(
            f"coordinate descent for user {user} did not settle in"
            f" {sweep_cap} sweeps"
        )

    # -- equilibrium checks -----------------------------------------------------

    def is_per_load_nash(self, starts: list[int]) -> bool:
        """No single load can move to strictly reduce its owner's bill."""
        profile = self.profile(starts)
        for i in range(self.n):
            if len(self.starts[i]) == 1:
                continue
            keys = self.placement_keys(profile, starts, i, self.owners[i])
            cur = keys[starts[i]]
            if any(k < cur for k in keys.values()):
                return False
        return True

    def is_per_user_nash(self, starts: list[int], cap: int) -> bool:
        """No user can strictly reduce their bill by re-placing any subset
        of their own loads, checked by exhaustive joint enumeration."""
        for user, indices in self.user_loads.items():
            if not indices:
                continue
            space = 1
            for i in indices:
                space *= len(self.starts[i])
            if space > cap:
                raise SchedGameError(
                    f"user {user}: own-action space {space} exceeds cap {cap}"
                )
            current = self.bill_cents(user, starts)
            trial = list(starts)
            if self._user_can_improve(trial, user, indices, 0, current):
                return False
        return True

    def _user_can_improve(self, trial, user, indices, pos, current) -> bool:
        if pos == len(indices):
            return self.bill_cents(user, trial) < current
        i = indices[pos]
        for s in self.starts[i]:
            trial[i] = s
            if self._user_can_improve(trial, user, indices, pos + 1, current):
                return True
        trial[i] = None if False else trial[i]
        return False
