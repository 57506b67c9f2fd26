import json
import os
import struct

import numpy as np
import pytest

from chirpqpm import io as pio
from chirpqpm.analysis import cwf, schmidt
from chirpqpm.cli import main
from chirpqpm.config import (
    ScenarioConfig,
    list_presets,
    load_config,
    load_preset,
    parse_config,
    to_cfg_text,
)
from chirpqpm.errors import ConfigParseError, ConfigValidationError, ProductIntegrityError
from chirpqpm.render import render
from chirpqpm.scenario import MANIFEST, OUTPUT_ENV, read_manifest, run_scenario
from conftest import baseline_jsa

SMALL = """
[scenario]
name = small
outputs = jsi, sps, cwf, schmidt, sweep
jsi_text = yes

[crystal]
model = congruent_ln_e
temperature = 25 C

[grating]
period = 20.33 um
length = 5 mm
chirp = 0, -5e-6, 3e-6
r = 0.5

[pump]
center = 800 nm
fwhm = 10 nm

[grid]
window = 1.0 um, 2.8 um
points = 48

[sweep]
chirps = -2e-6, 0, 2e-6
z0 = -0.25 L, 1.25 L
"""


def small_cfg(**changes):
    cfg = parse_config(SMALL, "small.cfg")
    return ScenarioConfig(**{**cfg.__dict__, **changes})


def files_in(path):
    return sorted(str(p.relative_to(path)) for p in path.rglob("*") if p.is_file())


# -- config ----------------------------------------------------------------

def test_presets_bundled():
    assert list_presets() == ["fig1", "fig2", "fig3", "fig4", "fig5"]


def test_fig1_baseline():
    cfg = load_preset("fig1")
    assert cfg.chirps == (0.0,) and cfg.rs == (0.5,)
    assert cfg.length == 5000.0 and cfg.lambda_c == 20.33
    assert cfg.pump_center == pytest.approx(0.8) and cfg.pump_fwhm == pytest.approx(0.01)
    assert cfg.crystal.temperature == 25.0


def test_figure_recipes():
    assert sorted(load_preset("fig2").chirps) == [-7e-6, -2e-6, -3e-7, 0.0, 3e-7, 2e-6, 7e-6]
    fig3 = load_preset("fig3")
    assert set(fig3.chirps) == {2e-6, -5e-6}
    assert fig3.rs == (1.25, 1.0, 0.75, 0.5, 0.25, 0.0, -0.25)
    fig5 = load_preset("fig5")
    assert [z / fig5.length for z in fig5.sweep_z0] == [-0.25, 0.5, 1.25]
    assert "sweep" in fig5.outputs


def test_grid_defaults():
    text = SMALL.replace("[grid]\nwindow = 1.0 um, 2.8 um\npoints = 48\n", "")
    cfg = parse_config(text)
    assert cfg.window == (1.0, 2.8) and cfg.n_points == 1024


def test_units():
    cfg = parse_config(SMALL.replace("period = 20.33 um", "period = 20330 nm").replace("r = 0.5", "z0 = 2.5 mm"))
    assert cfg.lambda_c == pytest.approx(20.33) and cfg.rs == (0.5,)


@pytest.mark.parametrize("old,new,field", [
    ("length = 5 mm", "length = 0 mm", "L > 0"),
    ("length = 5 mm", "length = -5 mm", "L > 0"),
    ("fwhm = 10 nm", "fwhm = 0 nm", "pump.fwhm"),
    ("model = congruent_ln_e", "model = unobtainium", "unknown Sellmeier model"),
    ("outputs = jsi, sps, cwf, schmidt, sweep", "outputs = jsi, movie", "unknown output"),
    ("chirp = 0, -5e-6, 3e-6", "chirp = -1e-3", "not positive"),
    ("window = 1.0 um, 2.8 um", "window = 2.8 um, 1.0 um", "grid.window"),
])
def test_validation_errors(old, new, field):
    with pytest.raises(ConfigValidationError, match=field):
        parse_config(SMALL.replace(old, new))


@pytest.mark.parametrize("old,new,field", [
    ("period = 20.33 um", "period = 20.33", "grating.period"),
    ("period = 20.33 um", "period = 20.33 furlongs", "unknown length unit"),
    ("[pump]", "[pmup]", "unknown section"),
    ("r = 0.5", "r = 0.5\nz0 = 0.5 L", "either grating.z0 or grating.r"),
    ("points = 48", "points = many", "grid.points"),
    ("[scenario]", "scenario]", "no section headers"),
])
def test_parse_errors(old, new, field):
    with pytest.raises(ConfigParseError, match=field):
        parse_config(SMALL.replace(old, new))


def test_missing_file():
    with pytest.raises(ConfigParseError):
        load_config("/nonexistent/x.cfg")


def test_custom_coefficients():
    text = SMALL.replace(
        "model = congruent_ln_e",
        "model = toy\nform = sellmeier\ncoefficients = 1, 3.5, 0.04\nvalid_range = 0.4 um, 5 um",
    )
    cfg = parse_config(text)
    assert cfg.crystal.name == "toy" and cfg.crystal.form == "sellmeier"
    again = parse_config(to_cfg_text(cfg))
    assert again.crystal == cfg.crystal


@pytest.mark.parametrize("name", ["fig1", "fig2", "fig3", "fig4", "fig5"])
def test_round_trips(name):
    cfg = load_preset(name)
    assert parse_config(to_cfg_text(cfg)) == cfg
    assert ScenarioConfig.from_mapping(json.loads(json.dumps(cfg.to_mapping()))) == cfg


# -- binary products -------------------------------------------------------

def test_binary_layout(tmp_path):
    a = np.array([[1 + 2j, 3 - 4j], [5.5 + 0j, -1j]])
    pio.write_product(tmp_path / "x.bin", "test", a, {"alpha": 0.1})
    raw = (tmp_path / "x.bin").read_bytes()
    assert raw[:8] == b"CQPMDAT\0"
    version, n_head = struct.unpack_from("<HI", raw, 8)
    assert version == 1
    header = raw[14:14 + n_head].decode()
    assert "kind=test\n" in header and "dtype=complex128\n" in header and "shape=2,2\n" in header
    assert "alpha=0.1\n" in header
    payload = np.frombuffer(raw[14 + n_head:], dtype="<f8")
    assert payload.tolist() == [1, 2, 3, -4, 5.5, 0, 0, -1]


def test_jsa_cwf_schmidt_round_trip(tmp_path):
    j = baseline_jsa(3e-6, 0.5)
    pio.save_jsa(tmp_path / "j.bin", j)
    back = pio.load_jsa(tmp_path / "j.bin")
    assert np.array_equal(back.values, j.values) and back.grid_s == j.grid_s and back.norm == j.norm
    assert float(back.meta["chirp_per_um2"]) == 3e-6
    w = cwf(j, t_window=1e-12)
    pio.save_cwf(tmp_path / "w.bin", w)
    wb = pio.load_cwf(tmp_path / "w.bin")
    assert np.array_equal(wb.values, w.values) and np.allclose(wb.t, w.t, rtol=0, atol=1e-9)
    res = schmidt(j)
    pio.save_schmidt(tmp_path / "s.bin", res)
    rb = pio.load_schmidt(tmp_path / "s.bin")
    assert rb.k_number == res.k_number and np.array_equal(rb.schmidt_coefficients, res.schmidt_coefficients)


def test_corrupt_products(tmp_path):
    pio.write_product(tmp_path / "x.bin", "test", np.arange(4.0))
    raw = (tmp_path / "x.bin").read_bytes()
    (tmp_path / "bad.bin").write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(ProductIntegrityError, match="magic"):
        pio.read_product(tmp_path / "bad.bin")
    (tmp_path / "short.bin").write_bytes(raw[:-3])
    with pytest.raises(ProductIntegrityError, match="payload"):
        pio.read_product(tmp_path / "short.bin")
    with pytest.raises(ProductIntegrityError, match="not a jsa"):
        pio.load_jsa(tmp_path / "x.bin")


def test_table_round_trip(tmp_path):
    pio.write_table(tmp_path / "t.tsv", ["D", "K", "error"], [[1e-6, 2.5, "-"]], comments=("note",))
    text = (tmp_path / "t.tsv").read_text()
    assert text.startswith("# note\n# D\tK\terror\n")
    cols, rows = pio.read_table(tmp_path / "t.tsv")
    assert cols == ["D", "K", "error"] and rows == [[1e-6, 2.5, "-"]]


# -- scenario runs ---------------------------------------------------------

@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run") / "small"
    return run_scenario(small_cfg(), out)


def test_manifest_completeness(small_run):
    out = small_run.output_dir
    m = read_manifest(out)
    assert m["status"] == "complete" and m["errors"] == []
    assert files_in(out) == sorted(list(m["files"]) + [MANIFEST])
    for name, entry in m["files"].items():
        assert entry["sha256"] == pio.sha256(out / name)
        assert entry["bytes"] == (out / name).stat().st_size
    kinds = {e["kind"] for e in m["files"].values()}
    assert kinds == {"config", "jsa", "jsi_text", "sps", "sps_widths", "cwf", "cwf_moments",
                     "schmidt", "sweep"}


def test_manifest_config_round_trip(small_run):
    m = read_manifest(small_run.output_dir)
    assert ScenarioConfig.from_mapping(m["config"]) == small_cfg()
    assert load_config(small_run.output_dir / "resolved.cfg") == small_cfg()


def test_sweep_table(small_run):
    cols, rows = pio.read_table(small_run.output_dir / "sweep.tsv")
    assert cols == ["D", "z0_um", "r", "K", "purity", "error"]
    assert len(rows) == 6
    zero = [r for r in rows if r[0] == 0.0]
    assert zero[0][3] == zero[1][3]


def test_rerun_bit_identical(small_run, tmp_path):
    again = run_scenario(small_cfg(), tmp_path / "again", workers=3)
    a = {k: v["sha256"] for k, v in small_run.manifest["files"].items()}
    b = {k: v["sha256"] for k, v in again.manifest["files"].items()}
    assert a == b


def test_rerun_in_place(tmp_path):
    cfg = small_cfg(outputs=("sps",))
    first = run_scenario(cfg, tmp_path / "r")
    render(tmp_path / "r")
    second = run_scenario(cfg, tmp_path / "r")
    assert first.manifest["files"] == second.manifest["files"]
    assert files_in(tmp_path / "r") == sorted(list(second.manifest["files"]) + [MANIFEST])


def test_foreign_files_refused(tmp_path):
    (tmp_path / "r").mkdir()
    (tmp_path / "r" / "notes.txt").write_text("mine")
    with pytest.raises(ProductIntegrityError, match="no manifest"):
        run_scenario(small_cfg(outputs=("sps",)), tmp_path / "r")


def test_partial_run_recorded(tmp_path):
    # a time window beyond the grid's unaliased range fails every cwf point
    res = run_scenario(small_cfg(outputs=("sps", "cwf"), cwf_window=1e-9), tmp_path / "p")
    m = res.manifest
    assert m["status"] == "partial" and len(m["errors"]) == 3
    assert all("AliasingError" in e["error"] for e in m["errors"])
    assert files_in(tmp_path / "p") == sorted(list(m["files"]) + [MANIFEST])


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "base"))
    res = run_scenario(small_cfg(outputs=("sps",)))
    assert res.output_dir == tmp_path / "base" / "small"


def test_render_products(small_run):
    out = small_run.output_dir
    before = read_manifest(out)["files"]
    paths = render(out)
    names = sorted(p.name for p in paths)
    assert "sps.png" in names and "sweep.png" in names
    assert sum(n.startswith("jsa_") for n in names) == 3
    assert sum(n.startswith("cwf_") for n in names) == 3
    m = read_manifest(out)
    assert m["files"] == before
    assert sorted(m["derived"]) == sorted(f"figures/{n}" for n in names)
    assert files_in(out) == sorted(list(m["files"]) + list(m["derived"]) + [MANIFEST])
    # rendering is a pure function of the products
    first = {k: v["sha256"] for k, v in m["derived"].items()}
    render(out)
    assert {k: v["sha256"] for k, v in read_manifest(out)["derived"].items()} == first


def test_render_detects_tampering(tmp_path):
    run_scenario(small_cfg(outputs=("sps",)), tmp_path / "t")
    with open(tmp_path / "t" / "sps.tsv", "a") as fh:
        fh.write("0\n")
    with pytest.raises(ProductIntegrityError, match="hash"):
        render(tmp_path / "t")
    os.remove(tmp_path / "t" / "sps.tsv")
    with pytest.raises(ProductIntegrityError, match="missing"):
        render(tmp_path / "t")


# -- command line ----------------------------------------------------------

def test_cli_exit_codes(tmp_path, capsys):
    cfg_path = tmp_path / "s.cfg"
    cfg_path.write_text(SMALL.replace("outputs = jsi, sps, cwf, schmidt, sweep", "outputs = sps"))
    assert main(["validate", str(cfg_path)]) == 0
    assert main(["run", str(cfg_path), "-o", str(tmp_path / "o"), "--render"]) == 0
    assert main(["render", str(tmp_path / "o")]) == 0
    assert main(["presets", "list"]) == 0
    assert capsys.readouterr().out.strip().endswith("fig5")

    bad = tmp_path / "bad.cfg"
    bad.write_text(SMALL.replace("[grating]", "[grating"))
    assert main(["validate", str(bad)]) == 2
    bad.write_text(SMALL.replace("length = 5 mm", "length = 0 mm"))
    assert main(["validate", str(bad)]) == 3
    partial = tmp_path / "partial.cfg"
    partial.write_text(SMALL.replace("outputs = jsi, sps, cwf, schmidt, sweep", "outputs = cwf")
                       + "\n[cwf]\nt_window = 1 ns\n")
    assert main(["run", str(partial), "-o", str(tmp_path / "p")]) == 4
    assert main(["render", str(tmp_path / "missing")]) == 5
