"""Bundle-pricing problem instances.

An instance describes ``n`` products offered to ``m`` customer segments.
Segment ``k`` values a bundle ``b`` (any subset of products) at
``f(sum of its per-product utilities)`` where ``f`` is an increasing concave
function (square root by default), and costs the seller the summed unit costs
of the bundle's products plus a per-segment serving cost.  The empty bundle
models non-purchase: it is always free, worthless, and costless.

The module also provides a deterministic synthetic generator and a canonical
text format so instances can be persisted and diffed reproducibly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ConfigError, ParseError

__all__ = [
    "Bundle",
    "EMPTY_BUNDLE",
    "Instance",
    "GenConfig",
    "reservation",
    "bundle_cost",
    "gen_instance",
    "serialize_instance",
    "parse_instance",
    "RESERVATION_KINDS",
]

FORMAT_HEADER = "bundlekit instance v1"

# Reservation transforms applied to summed utilities.  "sqrt" is the default
# concave choice; "identity" makes valuations additive, which is handy in
# tests because bundle values then decompose exactly.
RESERVATION_KINDS = {
    "sqrt": math.sqrt,
    "identity": lambda x: x,
}


@dataclass(frozen=True, order=True)
class Bundle:
    """A subset of the products ``1..n`` stored as a bitmask.

    Bit ``j-1`` set means product ``j`` is in the bundle.  The all-zero mask
    is the empty bundle (non-purchase).  Bundles are immutable, hashable and
    ordered by mask value, which gives a canonical ordering with the empty
    bundle first.
    """

    mask: int

    def __post_init__(self):
        if self.mask < 0:
            raise ValueError("bundle mask must be nonnegative")

    @classmethod
    def from_members(cls, members: Iterable[int]) -> "Bundle":
        mask = 0
        for j in members:
            if j < 1:
                raise ValueError(f"product index {j} out of range (must be >= 1)")
            mask |= 1 << (j - 1)
        return cls(mask)

    @classmethod
    def full(cls, n: int) -> "Bundle":
        return cls((1 << n) - 1)

    def members(self) -> tuple[int, ...]:
        """1-based product indices in increasing order."""
        out = []
        m, j = self.mask, 1
        while m:
            if m & 1:
                out.append(j)
            m >>= 1
            j += 1
        return tuple(out)

    @property
    def is_empty(self) -> bool:
        return self.mask == 0

    def size(self) -> int:
        return self.mask.bit_count()

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, j: int) -> bool:
        return j >= 1 and (self.mask >> (j - 1)) & 1 == 1

    def union(self, other: "Bundle") -> "Bundle":
        return Bundle(self.mask | other.mask)

    def add(self, j: int) -> "Bundle":
        return Bundle(self.mask | (1 << (j - 1)))

    def drop(self, j: int) -> "Bundle":
        return Bundle(self.mask & ~(1 << (j - 1)))

    def isdisjoint(self, other: "Bundle") -> bool:
        return self.mask & other.mask == 0

    def issubset(self, other: "Bundle") -> bool:
        return self.mask & ~other.mask == 0

    def __repr__(self) -> str:
        return "Bundle{" + ",".join(str(j) for j in self.members()) + "}"


EMPTY_BUNDLE = Bundle(0)


@dataclass(frozen=True)
class Instance:
    """Immutable problem data; safe to share across concurrent solvers.

    Fields
    ------
    n, m          : product and segment counts (>= 1).
    alpha         : segment proportions, shape (m,), sum > 0.
    u             : utilities, shape (m, n); ``u[k-1, j-1]`` is segment k's
                    utility for product j.
    c_unit        : per-product unit costs, shape (n,).
    c_serve       : per-segment serving costs, shape (m,).
    reservation_kind : key into RESERVATION_KINDS (default "sqrt").
    """

    n: int
    m: int
    alpha: np.ndarray
    u: np.ndarray
    c_unit: np.ndarray
    c_serve: np.ndarray
    reservation_kind: str = "sqrt"

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "c_unit", np.asarray(self.c_unit, dtype=float))
        object.__setattr__(self, "c_serve", np.asarray(self.c_serve, dtype=float))
        self.validate()

    def validate(self) -> None:
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError("n must be an integer >= 1")
        if not (isinstance(self.m, int) and self.m >= 1):
            raise ValueError("m must be an integer >= 1")
        if self.alpha.shape != (self.m,):
            raise ValueError(f"alpha must have shape ({self.m},), got {self.alpha.shape}")
        if self.u.shape != (self.m, self.n):
            raise ValueError(f"u must have shape ({self.m}, {self.n}), got {self.u.shape}")
        if self.c_unit.shape != (self.n,):
            raise ValueError(f"c_unit must have shape ({self.n},), got {self.c_unit.shape}")
        if self.c_serve.shape != (self.m,):
            raise ValueError(f"c_serve must have shape ({self.m},), got {self.c_serve.shape}")
        for name, arr in (("alpha", self.alpha), ("u", self.u),
                          ("c_unit", self.c_unit), ("c_serve", self.c_serve)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            if np.any(arr < 0):
                raise ValueError(f"{name} contains negative entries")
        if self.alpha.sum() <= 0:
            raise ValueError("segment proportions must sum to a positive value")
        if self.reservation_kind not in RESERVATION_KINDS:
            raise ValueError(f"unknown reservation kind {self.reservation_kind!r}")

    def all_bundles(self) -> list[Bundle]:
        """Every subset of the products in canonical (mask) order."""
        return [Bundle(mask) for mask in range(1 << self.n)]

    def check_segment(self, k: int) -> None:
        if not (1 <= k <= self.m):
            raise ValueError(f"segment index {k} out of range [1, {self.m}]")

    def check_bundle(self, b: Bundle) -> None:
        if b.mask >> self.n:
            raise ValueError(f"{b!r} references products beyond n={self.n}")


def reservation(inst: Instance, k: int, b: Bundle) -> float:
    """Willingness to pay of segment ``k`` for bundle ``b``.

    Returns ``f(sum of utilities of b's products)``; 0 for the empty bundle.
    """
    inst.check_segment(k)
    inst.check_bundle(b)
    if b.is_empty:
        return 0.0
    total = 0.0
    row = inst.u[k - 1]
    for j in b.members():
        total += row[j - 1]
    return RESERVATION_KINDS[inst.reservation_kind](total)


def bundle_cost(inst: Instance, k: int, b: Bundle) -> float:
    """Seller cost of selling bundle ``b`` to segment ``k``.

    Unit costs of the bundle's products plus the segment serving cost.  The
    empty bundle costs nothing: non-purchase incurs no serving cost.
    """
    inst.check_segment(k)
    inst.check_bundle(b)
    if b.is_empty:
        return 0.0
    total = float(inst.c_serve[k - 1])
    for j in b.members():
        total += inst.c_unit[j - 1]
    return total


def reservation_table(inst: Instance, bundles: list[Bundle]) -> np.ndarray:
    """Matrix of reservations, shape (m, len(bundles)).

    Vectorized helper for the formulation builders; row k-1 matches
    ``reservation(inst, k, b)`` for every b.
    """
    masks = np.array([b.mask for b in bundles], dtype=np.int64)
    member_matrix = ((masks[:, None] >> np.arange(inst.n)[None, :]) & 1).astype(float)
    sums = inst.u @ member_matrix.T  # (m, B)
    if inst.reservation_kind == "sqrt":
        values = np.sqrt(sums)
    else:
        values = sums
    values[:, masks == 0] = 0.0
    return values


def cost_table(inst: Instance, bundles: list[Bundle]) -> np.ndarray:
    """Matrix of seller costs, shape (m, len(bundles)); empty bundle is free."""
    masks = np.array([b.mask for b in bundles], dtype=np.int64)
    member_matrix = ((masks[:, None] >> np.arange(inst.n)[None, :]) & 1).astype(float)
    unit = member_matrix @ inst.c_unit  # (B,)
    costs = unit[None, :] + inst.c_serve[:, None]
    costs[:, masks == 0] = 0.0
    return costs


@dataclass(frozen=True)
class GenConfig:
    """Synthetic-instance generation settings.

    Defaults keep costs small relative to utilities so most generated
    instances are profitable to serve; generated data is synthetic and not
    calibrated to any published dataset.
    """

    seed: int = 0
    u_range: tuple[float, float] = (0.0, 1.0)
    c_unit_range: tuple[float, float] = (0.0, 0.1)
    c_serve_range: tuple[float, float] = (0.0, 0.05)
    alpha_mode: str = "equal"  # "equal" or "random"
    reservation_kind: str = "sqrt"

    def __post_init__(self):
        for name in ("u_range", "c_unit_range", "c_serve_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigError(f"{name} must be finite")
            if lo < 0:
                raise ConfigError(f"{name} lower bound must be >= 0")
            if lo > hi:
                raise ConfigError(f"{name} is degenerate: {lo} > {hi}")
        if self.alpha_mode not in ("equal", "random"):
            raise ConfigError(f"unknown alpha_mode {self.alpha_mode!r}")
        if self.reservation_kind not in RESERVATION_KINDS:
            raise ConfigError(f"unknown reservation kind {self.reservation_kind!r}")


def gen_instance(cfg: GenConfig, n: int, m: int) -> Instance:
    """Draw a random instance; deterministic in (cfg.seed, n, m)."""
    if n < 1 or m < 1:
        raise ConfigError("n and m must be >= 1")
    rng = np.random.default_rng([cfg.seed & 0xFFFFFFFF, n, m])
    u = rng.uniform(cfg.u_range[0], cfg.u_range[1], size=(m, n))
    c_unit = rng.uniform(cfg.c_unit_range[0], cfg.c_unit_range[1], size=n)
    c_serve = rng.uniform(cfg.c_serve_range[0], cfg.c_serve_range[1], size=m)
    if cfg.alpha_mode == "equal":
        alpha = np.full(m, 1.0 / m)
    else:
        draws = rng.uniform(0.05, 1.0, size=m)
        alpha = draws / draws.sum()
    return Instance(n=n, m=m, alpha=alpha, u=u, c_unit=c_unit, c_serve=c_serve,
                    reservation_kind=cfg.reservation_kind)


def _fmt(x: float) -> str:
    # 17 significant digits round-trips IEEE doubles exactly.
    return format(float(x), ".17g")


def serialize_instance(inst: Instance) -> str:
    """Canonical text form; field order is fixed so diffs are stable."""
    lines = [FORMAT_HEADER]
    lines.append(f"n {inst.n}")
    lines.append(f"m {inst.m}")
    lines.append(f"reservation {inst.reservation_kind}")
    lines.append("alpha " + " ".join(_fmt(a) for a in inst.alpha))
    lines.append("c_unit " + " ".join(_fmt(c) for c in inst.c_unit))
    lines.append("c_serve " + " ".join(_fmt(c) for c in inst.c_serve))
    for k in range(inst.m):
        lines.append("u " + " ".join(_fmt(v) for v in inst.u[k]))
    return "\n".join(lines) + "\n"


def _parse_floats(tokens: list[str], count: int, what: str, lineno: int) -> np.ndarray:
    if len(tokens) != count:
        raise ParseError(f"{what}: expected {count} values, got {len(tokens)}", lineno)
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise ParseError(f"{what}: {exc}", lineno) from None


def parse_instance(text: str) -> Instance:
    """Inverse of :func:`serialize_instance`; raises ParseError with a line number."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise ParseError(f"missing header {FORMAT_HEADER!r}", 1)

    fields: dict[str, object] = {}
    u_rows: list[np.ndarray] = []
    order = ["n", "m", "reservation", "alpha", "c_unit", "c_serve"]
    seen = 0
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        tokens = rest.split()
        if seen < len(order):
            expected = order[seen]
            if key != expected:
                raise ParseError(f"expected field {expected!r}, found {key!r}", lineno)
            seen += 1
            if key in ("n", "m"):
                try:
                    value = int(tokens[0]) if tokens else None
                except ValueError:
                    value = None
                if value is None or value < 1:
                    raise ParseError(f"{key} must be an integer >= 1", lineno)
                fields[key] = value
            elif key == "reservation":
                if len(tokens) != 1 or tokens[0] not in RESERVATION_KINDS:
                    raise ParseError(
                        f"reservation must be one of {sorted(RESERVATION_KINDS)}", lineno)
                fields[key] = tokens[0]
            elif key == "alpha":
                fields[key] = _parse_floats(tokens, fields["m"], "alpha", lineno)
            elif key == "c_unit":
                fields[key] = _parse_floats(tokens, fields["n"], "c_unit", lineno)
            elif key == "c_serve":
                fields[key] = _parse_floats(tokens, fields["m"], "c_serve", lineno)
        else:
            if key != "u":
                raise ParseError(f"expected a 'u' row, found {key!r}", lineno)
            if len(u_rows) >= fields["m"]:
                raise ParseError(f"too many 'u' rows (expected {fields['m']})", lineno)
            u_rows.append(_parse_floats(tokens, fields["n"], "u row", lineno))

    if seen < len(order):
        raise ParseError(f"missing field {order[seen]!r}", len(lines))
    if len(u_rows) != fields["m"]:
        raise ParseError(f"expected {fields['m']} 'u' rows, got {len(u_rows)}", len(lines))

    try:
        return Instance(
            n=fields["n"], m=fields["m"], alpha=fields["alpha"],
            u=np.vstack(u_rows), c_unit=fields["c_unit"], c_serve=fields["c_serve"],
            reservation_kind=fields["reservation"],
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from None
