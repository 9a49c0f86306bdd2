import json
import math

import numpy as np
import pytest

from pit2crack import CALIBRATED_SURFACE_FACTOR
from pit2crack.cli import main, resolve_seed
from pit2crack.fatigue import AnalysisSettings, in_band, life_field
from pit2crack.history import histories_to_csv, parse_history_csv, uniaxial_history
from pit2crack.mesh import read_stl
from pit2crack.pitgen import HierarchySpec, field_to_csv, generate_pit, read_field

MINIMAL = {"patch_size": [1000, 1000], "spacing": 20,
           "levels": [{"pit_count": 1, "radius_dist": {"kind": "fixed", "value": 300}}]}


def write_config(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_generate_minimal(tmp_path):
    cfg = write_config(tmp_path, MINIMAL)
    out = tmp_path / "a"
    assert main(["generate", "--config", str(cfg), "--seed", "5", "--out-dir", str(out)]) == 0
    for name in ("heightfield.csv", "heightfield.grid", "caps.csv", "metrics.json"):
        assert (out / name).is_file()
    field = read_field(out / "heightfield.csv")
    assert field.nx == 51 and field.depth.max() == pytest.approx(300.0, abs=0.5)
    assert field == generate_pit(HierarchySpec.from_dict(MINIMAL, seed=5))[0]
    m = manifest(out)
    assert m["seeds"] == [5]
    assert {o["file"] for o in m["outputs"]} == {"heightfield.csv", "heightfield.grid", "caps.csv",
                                                 "metrics.json"}


def test_generate_reproducible(tmp_path):
    cfg = write_config(tmp_path, MINIMAL)
    for d in ("a", "b"):
        assert main(["generate", "--config", str(cfg), "--seed", "9", "--out-dir", str(tmp_path / d)]) == 0
    assert manifest(tmp_path / "a")["outputs"] == manifest(tmp_path / "b")["outputs"]


def test_generate_config_error_names_path(tmp_path, capsys):
    bad = json.loads(json.dumps(MINIMAL))
    bad["levels"][0]["radius_dist"]["value"] = -5
    cfg = write_config(tmp_path, bad)
    assert main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2
    assert "levels[0].radius_dist" in capsys.readouterr().err


def test_generate_invalid_json(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{")
    assert main(["generate", "--config", str(p), "--out-dir", str(tmp_path / "o")]) == 2


def test_seed_precedence(monkeypatch):
    monkeypatch.delenv("PIT2CRACK_SEED", raising=False)
    assert resolve_seed(None, {}) == 0
    monkeypatch.setenv("PIT2CRACK_SEED", "77")
    assert resolve_seed(None, {}) == 77
    assert resolve_seed(None, {"seed": 3}) == 3
    assert resolve_seed(4, {"seed": 3}) == 4


def test_env_seed_used_by_generate(tmp_path, monkeypatch):
    monkeypatch.setenv("PIT2CRACK_SEED", "21")
    cfg = write_config(tmp_path, {k: v for k, v in MINIMAL.items()})
    assert main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 0
    assert manifest(tmp_path / "o")["seeds"] == [21]


def test_batch(tmp_path):
    cfg = write_config(tmp_path, MINIMAL)
    out = tmp_path / "b"
    assert main(["batch", "--config", str(cfg), "--n-samples", "3", "--seed-stream", "1",
                 "--out-dir", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["mean"]["d"] == pytest.approx(300.0, abs=0.5)
    rows = (out / "samples.csv").read_text().splitlines()
    assert len(rows) == 4


@pytest.mark.parametrize("d, D", [(500.0, 2000.0), (100.0, 400.0), (50.0, 1000.0)])
def test_idealize(tmp_path, d, D):
    out = tmp_path / "i"
    assert main(["idealize", "--depth", str(d), "--width", str(D), "--out-dir", str(out)]) == 0
    m = json.loads((out / "metrics.json").read_text())
    assert m["d"] == pytest.approx(d, abs=0.5)
    assert abs(m["w"] - D) <= 20.0


def test_idealize_requires_dimensions(tmp_path):
    assert main(["idealize", "--depth", "10", "--out-dir", str(tmp_path)]) == 2


def test_idealize_from_field(tmp_path):
    cfg = write_config(tmp_path, MINIMAL)
    main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / "g")])
    out = tmp_path / "i"
    assert main(["idealize", "--from", str(tmp_path / "g" / "heightfield.grid"), "--out-dir", str(out)]) == 0
    src = json.loads((tmp_path / "g" / "metrics.json").read_text())
    got = json.loads((out / "metrics.json").read_text())
    assert got["d"] == pytest.approx(src["d"], rel=1e-9)


@pytest.mark.parametrize("fmt", ["binary", "ascii"])
def test_mesh(tmp_path, fmt):
    cfg = write_config(tmp_path, MINIMAL)
    main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / "g")])
    src = tmp_path / "g" / "heightfield.csv"
    out = tmp_path / "m"
    assert main(["mesh", str(src), "--stl", fmt, "--slab", "500", "--out-dir", str(out)]) == 0
    data = (out / "heightfield.stl").read_bytes()
    n = 51
    t = 4 * (n - 1) ** 2 + 2 * 4 * (n - 1)
    if fmt == "binary":
        assert len(data) == 84 + 50 * t
    assert read_stl(data).shape == (t, 3, 3)


def test_mesh_slab_too_thin(tmp_path):
    cfg = write_config(tmp_path, MINIMAL)
    main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / "g")])
    assert main(["mesh", str(tmp_path / "g" / "heightfield.csv"), "--slab", "100",
                 "--out-dir", str(tmp_path / "m")]) == 2


def test_life_sample_matches_library(tmp_path, material, capsys):
    out = tmp_path / "l"
    assert main(["life", "--sample", "--out-dir", str(out)]) == 0
    lines = (out / "life.csv").read_text().splitlines()
    assert lines[0] == "location_id,Nf,log10_life,theta,phi,psi,damage_per_pass"
    from importlib import resources
    data = (resources.files("pit2crack") / "data" / "uniaxial_sample.csv").read_bytes()
    results, worst = life_field(parse_history_csv(data), material, AnalysisSettings())
    assert float(lines[1].split(",")[1]) == worst.Nf
    report = json.loads((out / "report.json").read_text())
    assert report["worst"]["Nf"] == worst.Nf
    assert report["worst"]["cycles"]
    assert "Nf = " in capsys.readouterr().out


def test_life_malformed_csv(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    header = "location_id,step,exx,eyy,ezz,gxy,gxz,gyz,sxx,syy,szz,txy,txz,tyz"
    p.write_text(header + "\nA,0," + ",".join(["0"] * 12) + "\nA,1," + ",".join(["x"] * 12) + "\n")
    assert main(["life", str(p), "--out-dir", str(tmp_path / "o")]) == 2
    assert "row 3" in capsys.readouterr().err
    assert main(["validate-history", str(p)]) == 2


def test_life_missing_input(tmp_path):
    assert main(["life", "--out-dir", str(tmp_path)]) == 2
    assert main(["life", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path)]) == 2


def test_life_plane_step_refinement(tmp_path, material):
    h = uniaxial_history(260, 26, material, points_per_cycle=8)
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    p = tmp_path / "h.csv"
    p.write_text(histories_to_csv([h.rotated(q)]))
    lives = {}
    for step in ("5", "10"):
        out = tmp_path / step
        assert main(["life", str(p), "--plane-step", step, "--psi-step", step, "--no-refine",
                     "--criterion", "max_damage", "--out-dir", str(out)]) == 0
        lives[step] = float((out / "life.csv").read_text().splitlines()[1].split(",")[1])
    # the 10 degree grid is a subset of the 5 degree grid
    assert lives["5"] <= lives["10"]


def test_life_jobs_canonical_order(tmp_path, material):
    base = uniaxial_history(260, 26, material, points_per_cycle=4)
    hs = [base.scaled(k, k, location_id=name) for name, k in (("c", 1.0), ("a", 1.1), ("b", 0.9))]
    p = tmp_path / "h.csv"
    p.write_text(histories_to_csv(hs))
    outs = []
    for jobs in ("1", "2"):
        out = tmp_path / f"j{jobs}"
        assert main(["life", str(p), "--jobs", jobs, "--out-dir", str(out)]) == 0
        outs.append((out / "life.csv").read_bytes())
    assert outs[0] == outs[1]
    ids = [line.split(",")[0] for line in outs[0].decode().splitlines()[1:]]
    assert ids == ["a", "b", "c"]


def test_validate_intact_pass_and_fail(tmp_path, capsys):
    assert main(["validate-intact", "--out-dir", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "validation.json").read_text())
    assert report["passed"] and report["surface_factor"] == CALIBRATED_SURFACE_FACTOR
    assert 6.08e6 <= report["Nf"] <= 7.55e6
    assert "PASS" in capsys.readouterr().out
    assert main(["validate-intact", "--surface-factor", "1"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out
    nf = float(out.split("Nf = ")[1].split()[0])
    assert 1e7 < nf < 1e8


def test_band_edges_closed():
    assert in_band(6.08e6) and in_band(7.55e6)
    assert not in_band(math.nextafter(6.08e6, 0)) and not in_band(math.nextafter(7.55e6, math.inf))


def test_validate_history_ok(tmp_path, material, capsys):
    p = tmp_path / "h.csv"
    p.write_text(histories_to_csv([uniaxial_history(260, 26, material)]))
    assert main(["validate-history", str(p)]) == 0
    assert "OK" in capsys.readouterr().out


def test_version_and_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    with pytest.raises(SystemExit) as exc:
        main(["life", "--plane-step"])
    assert exc.value.code == 2
