
import numpy as np
import pytest

from orion.params import (
    DELTA, UNIT_SCALE, CkksParams, ParamError, ScaleDescriptor, load_params,
    prime, scale_div_prime, scale_mul, scale_solve, validate,
)


def test_validate_conjugate_invariant_preset():
    # slots == ring degree is the "conjugate invariant" configuration
    validate(CkksParams(ring_degree=2**13, slots=2**13, max_level=5,
                        boot_depth=0, base_scale_log2=30.0))


def test_validate_default_preset():
    p = CkksParams()
    validate(p)
    assert p.ring_degree == 2**16 and p.slots == 2**15
    assert p.max_level == 25 and p.boot_depth == 15
    assert p.eff_level == 10
    assert p.prime_log2s == tuple([40.0] * 26)


def test_validate_rejects_non_power_of_two():
    with pytest.raises(ParamError, match="ring_degree"):
        validate(CkksParams(ring_degree=1000, slots=500))


def test_validate_rejects_bad_slots():
    with pytest.raises(ParamError, match="slots"):
        validate(CkksParams(ring_degree=64, slots=16, max_level=3, boot_depth=0))


def test_validate_rejects_exhausted_levels():
    with pytest.raises(ParamError, match="eff_level"):
        validate(CkksParams(ring_degree=64, slots=32, max_level=5, boot_depth=5))


def test_validate_rejects_stray_prime():
    with pytest.raises(ParamError, match="prime_log2s\\[2\\]"):
        validate(CkksParams(ring_degree=64, slots=32, max_level=3, boot_depth=0,
                            base_scale_log2=40.0,
                            prime_log2s=(40.0, 40.5, 42.0, 40.0)))


def test_load_params_yaml(tmp_path):
    cfg = tmp_path / "params.yaml"
    cfg.write_text(
        "ring_degree: 64\nslots: 32\nmax_level: 4\nboot_depth: 0\n"
        "base_scale_log2: 30\n")
    p = load_params(cfg)
    assert p.slots == 32 and p.eff_level == 4


def test_scale_mul_examples():
    assert scale_mul(DELTA, DELTA) == ScaleDescriptor(2)
    assert scale_mul(DELTA, prime(3)) == ScaleDescriptor(1, ((3, 1),))
    # exponent cancellation
    have = ScaleDescriptor(2, ((3, -1),))
    assert scale_mul(have, prime(3)) == ScaleDescriptor(2)


def test_scale_div_prime_examples():
    assert scale_div_prime(DELTA.mul(prime(5)), 5) == DELTA
    assert scale_div_prime(ScaleDescriptor(2), 5) == ScaleDescriptor(2, ((5, -1),))
    assert scale_div_prime(DELTA.mul(prime(5)).mul(prime(4)), 5) == \
        DELTA.mul(prime(4))


def test_scale_solve_examples():
    assert scale_solve(DELTA.mul(prime(7)), DELTA) == prime(7)
    assert scale_solve(DELTA, DELTA) == UNIT_SCALE
    s = scale_solve(DELTA, ScaleDescriptor(2, ((3, -1),)))
    assert s == ScaleDescriptor(-1, ((3, 1),))
    assert scale_mul(ScaleDescriptor(2, ((3, -1),)), s) == DELTA


def _random_descriptor(rng):
    delta = int(rng.integers(-3, 4))
    levels = rng.choice(10, size=rng.integers(0, 4), replace=False)
    exps = tuple((int(l), int(rng.integers(-2, 3)) or 1) for l in levels)
    return ScaleDescriptor(delta, exps)


def test_scale_group_properties():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a, b, c = (_random_descriptor(rng) for _ in range(3))
        assert scale_mul(a, b) == scale_mul(b, a)
        assert scale_mul(scale_mul(a, b), c) == scale_mul(a, scale_mul(b, c))
        assert scale_mul(a, scale_solve(c, a)) == c
        lvl = int(rng.integers(0, 10))
        assert scale_div_prime(scale_mul(a, prime(lvl)), lvl) == a


def test_scale_numeric_value():
    params = CkksParams(ring_degree=64, slots=32, max_level=9, boot_depth=0,
                        base_scale_log2=40.0,
                        prime_log2s=tuple(40.0 + 0.1 * i for i in range(10)))
    rng = np.random.default_rng(11)
    for _ in range(100):
        d = _random_descriptor(rng)
        expected_log2 = d.delta_exp * 40.0 + sum(
            e * (40.0 + 0.1 * lvl) for lvl, e in d.prime_exps)
        # summation order differs between the two routes; allow a few ulps
        assert d.value(params) == pytest.approx(2.0 ** expected_log2, rel=1e-12)


def test_descriptor_normalization_and_json():
    d = ScaleDescriptor(1, ((4, 0), (2, 1)))
    assert d.prime_exps == ((2, 1),)
    assert ScaleDescriptor.from_json(d.to_json()) == d
    assert str(DELTA) == "D"
    assert str(UNIT_SCALE) == "1"
