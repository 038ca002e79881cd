import json
import os
from fractions import Fraction
from pathlib import Path

import pytest

import nilmap

SPECS = Path(os.environ.get("NILMAP_SPEC_DIR", Path(__file__).resolve().parents[2] / "specs"))


def test_polynomial_arithmetic():
    p = nilmap.Polynomial("x1 + x2", 2)
    q = nilmap.Polynomial("x1 - x2", 2)
    assert p * q == nilmap.Polynomial("x1^2 - x2^2", 2)
    assert str(p * p) == str(nilmap.Polynomial("x1^2 + 2*x1*x2 + x2^2", 2))
    assert (p ** 3).degree == 3
    assert p.partial(2) == nilmap.Polynomial("1", 2)
    assert p.eval_exact(["1/2", "1/3"]) == Fraction(5, 6)
    assert p([1.0, 2.0]) == pytest.approx(3.0)


def test_nilpotent_and_inverse():
    H = nilmap.PolyMap(["x2 - x1^3", "x3 + 3*x1^2*(x2 - x1^3)", "x4 - 3*x1*(x2 - x1^3)^2", "(x2 - x1^3)^3"])
    cert = nilmap.is_nilpotent(H)
    assert cert["nilpotent"]
    assert nilmap.rows_dependent(H) is None

    F = H - nilmap.PolyMap.identity(4)
    assert F == -1 * nilmap.PolyMap.identity(4) + H
    G, bundle = nilmap.formal_inverse(F, "-1")
    assert bundle["right_identity"] and bundle["left_identity"]
    assert F.compose(G) == nilmap.PolyMap.identity(4)
    assert nilmap.preservation_check(F, -1)["independent"]


def test_not_nilpotent_raises():
    F = nilmap.PolyMap(["x1 + x1^2", "x2"])
    with pytest.raises(RuntimeError):
        nilmap.formal_inverse(F, 1)


def test_dependent_spec_witness():
    spec = nilmap.load_spec(str(SPECS / "dependent_n4.json"))
    w = nilmap.rows_dependent(spec.nilpotent_part())
    assert w is not None and any(w)


def test_hurwitz_field():
    spec = nilmap.parse_spec(json.dumps({
        "family": "hurwitz", "n": 2, "lambda": "-1", "f": "-t", "R": "t^2",
        "pairs": [{"a_odd": "1/2", "a_even": "1/2"}]}))
    assert nilmap.alpha_bound(spec) == Fraction(10, 3)
    F = spec.primary_map()
    ev = nilmap.eigenvalues_at(F, [0.3, -0.2, 1.0])
    assert max(e.real for e in ev) < 0
    scan = nilmap.hurwitz_scan(F, samples=500, seed=1)
    assert scan["max_real_part_off_plane"] < 0
    S = nilmap.divergence_numerator(spec, "103/30")
    assert nilmap.density_scan(S, samples=500)["min_value_off_plane"] > 0


def test_cegmh_diverges():
    tr = nilmap.integrate(nilmap.cegmh_field(3), [18.0, -12.0, 1.0], t_max=20.0, record=False)
    assert tr["terminated"] == "diverged"
