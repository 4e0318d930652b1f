"""CKKS scheme parameters and the exact scale algebra shared by all modules.

Scales are tracked as integer exponent vectors over the basis {delta, q_0..q_L}
rather than floating-point products: delta * q_j overflows the double mantissa,
and the compiler's invariant checks need exact structural equality.
"""

from __future__ import annotations

import json

from dataclasses import dataclass, field


class ParamError(ValueError):
    """A CkksParams invariant is violated."""


def _is_power_of_two(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class CkksParams:
    """Ring degree, slot count, modulus-chain shape and base scale.

    Primes are specified by their log2 only; no modular arithmetic is ever
    performed, so only relative scale magnitudes matter.
    """

    ring_degree: int = 2**16
    slots: int = 2**15
    max_level: int = 25
    boot_depth: int = 15
    base_scale_log2: float = 40.0
    prime_log2s: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.prime_log2s:
            object.__setattr__(
                self, "prime_log2s",
                tuple([self.base_scale_log2] * (self.max_level + 1)))
        else:
            object.__setattr__(self, "prime_log2s", tuple(self.prime_log2s))

    @property
    def eff_level(self) -> int:
        return self.max_level - self.boot_depth

    def prime_log2(self, level: int) -> float:
        return self.prime_log2s[level]


def validate(params: CkksParams) -> None:
    """Check every CkksParams invariant, reporting the first violation by name."""
    if not _is_power_of_two(params.ring_degree):
        raise ParamError(f"ring_degree: {params.ring_degree} is not a power of two")
    if params.slots not in (params.ring_degree, params.ring_degree // 2):
        raise ParamError(
            f"slots: {params.slots} must be ring_degree or ring_degree/2")
    if params.ring_degree % params.slots != 0:
        raise ParamError(f"slots: {params.slots} does not divide ring_degree")
    if params.max_level < 0:
        raise ParamError(f"max_level: {params.max_level} is negative")
    if params.boot_depth < 0:
        raise ParamError(f"boot_depth: {params.boot_depth} is negative")
    if params.eff_level < 1:
        raise ParamError(
            f"eff_level: max_level - boot_depth = {params.eff_level} must be >= 1")
    if len(params.prime_log2s) != params.max_level + 1:
        raise ParamError(
            f"prime_log2s: expected {params.max_level + 1} entries, "
            f"got {len(params.prime_log2s)}")
    for i, p in enumerate(params.prime_log2s):
        if abs(p - params.base_scale_log2) > 1.0:
            raise ParamError(
                f"prime_log2s[{i}]: {p} deviates from base scale "
                f"{params.base_scale_log2} by more than 1")


def load_params(source) -> CkksParams:
    """Build CkksParams from a dict, or a JSON/YAML config file path."""
    if isinstance(source, CkksParams):
        return source
    if not isinstance(source, dict):
        text = open(source).read()
        try:
            source = json.loads(text)
        except json.JSONDecodeError:
            import yaml
            source = yaml.safe_load(text)
    known = {"ring_degree", "slots", "max_level", "boot_depth",
             "base_scale_log2", "prime_log2s"}
    cfg = {k: v for k, v in source.items() if k in known}
    if "prime_log2s" in cfg and cfg["prime_log2s"] is not None:
        cfg["prime_log2s"] = tuple(cfg["prime_log2s"])
    else:
        cfg.pop("prime_log2s", None)
    params = CkksParams(**cfg)
    validate(params)
    return params


@dataclass(frozen=True)
class ScaleDescriptor:
    """Exact scale value delta^delta_exp * prod q_i^prime_exps[i].

    Equality is structural equality of the exponent vectors (zero exponents
    are normalized away); the numeric value only exists in log2 domain.
    """

    delta_exp: int = 0
    prime_exps: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        cleaned = tuple(sorted((lvl, e) for lvl, e in self.prime_exps if e != 0))
        object.__setattr__(self, "prime_exps", cleaned)

    def mul(self, other: "ScaleDescriptor") -> "ScaleDescriptor":
        exps = dict(self.prime_exps)
        for lvl, e in other.prime_exps:
            exps[lvl] = exps.get(lvl, 0) + e
        return ScaleDescriptor(self.delta_exp + other.delta_exp, tuple(exps.items()))

    def div_prime(self, level: int) -> "ScaleDescriptor":
        exps = dict(self.prime_exps)
        exps[level] = exps.get(level, 0) - 1
        return ScaleDescriptor(self.delta_exp, tuple(exps.items()))

    def inverse(self) -> "ScaleDescriptor":
        return ScaleDescriptor(
            -self.delta_exp, tuple((lvl, -e) for lvl, e in self.prime_exps))

    def log2_value(self, params: CkksParams) -> float:
        total = self.delta_exp * params.base_scale_log2
        for lvl, e in self.prime_exps:
            total += e * params.prime_log2(lvl)
        return total

    def value(self, params: CkksParams) -> float:
        return 2.0 ** self.log2_value(params)

    def is_delta(self) -> bool:
        return self.delta_exp == 1 and not self.prime_exps

    def to_json(self) -> dict:
        return {"delta": self.delta_exp,
                "primes": {str(lvl): e for lvl, e in self.prime_exps}}

    @classmethod
    def from_json(cls, obj: dict) -> "ScaleDescriptor":
        return cls(obj["delta"],
                   tuple((int(lvl), e) for lvl, e in obj["primes"].items()))

    def __str__(self):
        parts = []
        if self.delta_exp:
            parts.append(f"D^{self.delta_exp}" if self.delta_exp != 1 else "D")
        for lvl, e in self.prime_exps:
            parts.append(f"q{lvl}^{e}" if e != 1 else f"q{lvl}")
        return "*".join(parts) if parts else "1"


UNIT_SCALE = ScaleDescriptor()
DELTA = ScaleDescriptor(delta_exp=1)


def prime(level: int) -> ScaleDescriptor:
    return ScaleDescriptor(0, ((level, 1),))


def scale_mul(a: ScaleDescriptor, b: ScaleDescriptor) -> ScaleDescriptor:
    """Exponent-wise sum: the scale of a product."""
    return a.mul(b)


def scale_div_prime(s: ScaleDescriptor, level: int) -> ScaleDescriptor:
    """Drop one factor of q_level: the scale effect of a rescale."""
    return s.div_prime(level)


def scale_solve(target: ScaleDescriptor, have: ScaleDescriptor) -> ScaleDescriptor:
    """The s with scale_mul(have, s) == target.

    Used to pick the free plaintext encoding scales that land multiplication
    results back on exactly delta after rescaling. Always solvable: the
    descriptors form a free abelian group.
    """
    return target.mul(have.inverse())
