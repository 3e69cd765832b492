import json

import pytest

from jetgeo.cli import main
from jetgeo.connections import connection_to_dict, projective_shift
from jetgeo.jets import jet_to_dict
from jetgeo.sampling import random_connection, random_expressions, random_secjet2, spawn_rng
from jetgeo.expr import CoordinateFrame


def write(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


@pytest.fixture
def zero_spec(tmp_path):
    return write(tmp_path / "zero.json", {"coords": ["u1", "u2"], "n": 1, "christoffel": []})


@pytest.fixture
def random_spec_pair(tmp_path):
    frame = CoordinateFrame(("u1", "u2", "u3"), 1)
    rng = spawn_rng(70)
    g = random_connection(frame, rng)
    shifted = projective_shift(g, random_expressions(frame.names, rng, 3))
    a = write(tmp_path / "a.json", connection_to_dict(g))
    b = write(tmp_path / "b.json", connection_to_dict(shifted))
    return a, b


def test_invariants_zero_connection(zero_spec, capsys):
    assert main(["invariants", zero_spec]) == 0
    out = capsys.readouterr().out
    assert out.startswith("family,indices,expression")
    assert len(out.strip().splitlines()) == 1  # header only: all components vanish


def test_invariants_malformed_expression(tmp_path, capsys):
    spec = write(
        tmp_path / "bad.json",
        {"coords": ["u1", "u2"], "n": 1,
         "christoffel": [{"lower": [1, 1], "upper": 2, "expr": "u1^^2"}]},
    )
    assert main(["invariants", spec]) == 2
    err = capsys.readouterr().err
    assert "error" in err
    assert "grammar" in err


def test_invariants_compare_projective_pair(random_spec_pair, capsys):
    a, b = random_spec_pair
    assert main(["invariants", a, "--compare", b, "--seed", "1"]) == 0
    assert "identical" in capsys.readouterr().err


def test_equivalent_same_connection(zero_spec, capsys):
    assert main(["equivalent", zero_spec, zero_spec, "--samples", "5"]) == 0
    assert "EQUIVALENT" in capsys.readouterr().err


def test_equivalent_projective_pair(random_spec_pair, capsys):
    a, b = random_spec_pair
    assert main(["equivalent", a, b, "--samples", "10", "--seed", "2"]) == 0


def test_equivalent_detects_difference(zero_spec, tmp_path, capsys):
    other = write(
        tmp_path / "c.json",
        {"coords": ["u1", "u2"], "n": 1,
         "christoffel": [{"lower": [1, 1], "upper": 2, "expr": "1"}]},
    )
    assert main(["equivalent", zero_spec, other, "--samples", "5"]) == 1
    assert "NOT" in capsys.readouterr().err


def test_equivalent_dimension_mismatch(zero_spec, tmp_path, capsys):
    other = write(tmp_path / "d.json", {"coords": ["u1", "u2", "u3"], "n": 1, "christoffel": []})
    assert main(["equivalent", zero_spec, other]) == 2


def test_residual_unparam_with_cover(zero_spec, tmp_path, capsys):
    rng = spawn_rng(71)
    good = random_secjet2(1, 2, rng)
    singular = jet_to_dict(good)
    singular["derivs"] = [
        {**item, "value": 0.0} if item["sigma"] == [1] and item["A"] == 1 else item
        for item in singular["derivs"]
    ]
    jets = write(tmp_path / "jets.json", {"jets": [jet_to_dict(good), singular]})
    assert main(["residual", zero_spec, "--jets", jets, "--mode", "unparam"]) == 0
    out = capsys.readouterr().out
    assert "singular-jacobian" in out


def test_residual_unparam_direct_subjet_zeros(zero_spec, tmp_path, capsys):
    data = {
        "kind": "subjet", "n": 1, "m": 1, "r": 2, "u": [0.1, 0.2],
        "derivs": [
            {"i": 2, "sigma": [1], "value": 0.7},
            {"i": 2, "sigma": [1, 1], "value": 0.0},
        ],
    }
    jets = write(tmp_path / "flatjet.json", data)
    assert main(["residual", zero_spec, "--jets", jets, "--mode", "unparam"]) == 0
    last = capsys.readouterr().out.strip().splitlines()[-1].split(",")
    assert float(last[-1]) == 0.0


def test_residual_kind_mismatch(zero_spec, tmp_path, capsys):
    rng = spawn_rng(72)
    from jetgeo.jets import cover2

    sub = cover2(random_secjet2(1, 2, rng))
    jets = write(tmp_path / "subjets.json", jet_to_dict(sub))
    assert main(["residual", zero_spec, "--jets", jets, "--mode", "param"]) == 2


def test_residual_param_zero_rows(zero_spec, tmp_path, capsys):
    rng = spawn_rng(73)
    from jetgeo.connections import Connection
    from jetgeo.geodesy import ddot_gamma_pro
    from jetgeo.sampling import random_secjet1

    theta_flat = Connection.zero(CoordinateFrame(("x1",), 1))
    from jetgeo.connections import connection_from_dict

    g = connection_from_dict(json.loads(open(zero_spec).read()))
    q = ddot_gamma_pro(g, theta_flat, random_secjet1(1, 2, rng))
    jets = write(tmp_path / "onzero.json", jet_to_dict(q))
    assert main(["residual", zero_spec, "--jets", jets, "--mode", "param"]) == 0
    out = capsys.readouterr().out
    last = out.strip().splitlines()[-1].split(",")
    assert float(last[-1]) <= 1e-12


def test_geodesic_flat_line(zero_spec, capsys):
    code = main([
        "geodesic", zero_spec, "--start", "0,1", "--velocity", "0.5,-1",
        "--h", "0.1", "--steps", "10",
    ])
    assert code == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert rows[0].startswith("t,u1,u2,v1,v2,residual_max")
    final = rows[-1].split(",")
    assert float(final[0]) == pytest.approx(1.0)
    assert float(final[1]) == pytest.approx(0.5)


def test_geodesic_rejects_bad_step(zero_spec, capsys):
    assert main(["geodesic", zero_spec, "--start", "0,0", "--velocity", "1,0",
                 "--h", "-0.1", "--steps", "5"]) == 2


def test_geodesic_domain_error_truncates(tmp_path, capsys):
    spec = write(
        tmp_path / "sing.json",
        {"coords": ["u1", "u2"], "n": 1,
         "christoffel": [{"lower": [1, 1], "upper": 1, "expr": "-sqrt(1 - u1)"}]},
    )
    code = main(["geodesic", spec, "--start", "0,0", "--velocity", "2,0",
                 "--h", "0.1", "--steps", "20"])
    assert code == 3
    assert "error" in capsys.readouterr().out


def test_cover_check(random_spec_pair, capsys):
    a, _ = random_spec_pair
    assert main(["cover-check", a, "--samples", "10", "--seed", "3"]) == 0
    assert "PASS" in capsys.readouterr().err


def test_symmetry_check_affine(zero_spec, tmp_path, capsys):
    aff = write(tmp_path / "aff.json", {"a": [[2.0]], "b": [1.0]})
    assert main(["symmetry-check", zero_spec, "--affine", aff, "--samples", "10"]) == 0
    assert "PASS" in capsys.readouterr().err


def test_symmetry_check_map_fails_for_quadratic(zero_spec, tmp_path, capsys):
    quad = write(
        tmp_path / "quad.json",
        {"kind": "subjet", "n": 1, "coords": ["u1", "u2"],
         "components": {"u1": "u1", "u2": "u2 + u1^2", "u2_1": "u2_1 + 2*u1"}},
    )
    assert main(["symmetry-check", zero_spec, "--map", quad, "--samples", "10"]) == 1
    assert "FAIL" in capsys.readouterr().err


def test_symmetry_check_field(zero_spec, tmp_path, capsys):
    field = write(
        tmp_path / "euler.json",
        {"kind": "subjet", "n": 1, "coords": ["u1", "u2"],
         "components": {"u1": "u1", "u2": "u2", "u2_1": "0"}},
    )
    assert main(["symmetry-check", zero_spec, "--field", field, "--samples", "10"]) == 0


def test_output_determinism(random_spec_pair, tmp_path):
    a, b = random_spec_pair
    out1 = tmp_path / "r1.csv"
    out2 = tmp_path / "r2.csv"
    main(["equivalent", a, b, "--samples", "8", "--seed", "9", "--out", str(out1)])
    main(["equivalent", a, b, "--samples", "8", "--seed", "9", "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


def test_json_format(zero_spec, capsys):
    assert main(["equivalent", zero_spec, zero_spec, "--samples", "3", "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["summary"]["samples"] == 3


def test_selftest_squeezed_tolerance_fails(capsys, monkeypatch):
    # full selftest is exercised by test_acceptance; here only the
    # tolerance-override contract, on the cheapest criterion subset
    import jetgeo.cli as cli

    monkeypatch.setattr(cli, "run_all", lambda cfg: [__import__("jetgeo.acceptance", fromlist=["criterion_10"]).criterion_10(cfg)])
    assert main(["selftest", "--tol", "1e-30"]) == 1
    assert main(["selftest"]) == 0


def test_env_seed_fallback(zero_spec, capsys, monkeypatch):
    monkeypatch.setenv("JETGEO_SEED", "17")
    assert main(["equivalent", zero_spec, zero_spec, "--samples", "3"]) == 0
