import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twophoton.config import from_sections, load_config, parse_length, to_sections
from twophoton.geometry import ConfigError, ScanPlan, reference_paper_config
from twophoton.output import (
    ANALYTIC_COLUMNS,
    MONTECARLO_COLUMNS,
    Series,
    read_csv,
    write_csv,
    write_manifest,
    write_svg,
)

SVG = "{http://www.w3.org/2000/svg}"

FULL = """
[source]
wavelength = "632.8nm"
source_separation_d = "1.1mm"
spot_size_s = "110um"
distance_z = "2.955m"
polarization = "orthogonal"
emitters_per_spot = 32

[scan]
mode = "fixed_d2"
start = "-2mm"
stop = "2mm"
step = "0.25mm"
fixed_x2 = "0.5mm"

[monte_carlo]
seed = 7
realizations = 1000
amplitude_model = "phasor"
"""


@pytest.mark.parametrize(
    "text, value",
    [("632.8nm", 632.8e-9), ("1.1mm", 1.1e-3), ("5um", 5e-6), ("2.955m", 2.955), ("2.955", 2.955),
     (0.5, 0.5), (3, 3.0), (" -3 mm ", -3e-3), ("1e-1mm", 1e-4)],
)
def test_parse_length(text, value):
    assert parse_length(text) == value


@pytest.mark.parametrize("bad", ["3 furlongs", "mm", "", True, None, "1.1 mm mm"])
def test_parse_length_rejects(bad):
    with pytest.raises(ConfigError) as info:
        parse_length(bad, "spot_size_s")
    assert info.value.field == "spot_size_s"


def test_load_full_config(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(FULL)
    loaded = load_config(path)
    cfg = loaded.experiment
    assert cfg.spot_size_s == 0.11e-3 and cfg.emitters_per_spot == 32
    assert cfg.polarization.value == "orthogonal"
    assert cfg.seed == 7 and cfg.realizations == 1000
    assert loaded.amplitude_model == "phasor"
    plan = loaded.plan(ScanPlan("opposite", [0.0]))
    assert plan.mode.value == "fixed_d2" and plan.fixed_x2 == 0.5e-3
    assert len(plan.positions) == 17 and plan.positions[0] == -2e-3


def test_missing_keys_take_reference_values(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('[source]\nspot_size_s = "0.2mm"\n')
    loaded = load_config(path)
    assert loaded.experiment == reference_paper_config(spot_size_s=0.2e-3)
    assert loaded.scan == {}


@pytest.mark.parametrize(
    "text, field",
    [
        ("[source]\ncolour = 1\n", "source.colour"),
        ("[detectors]\nx = 1\n", "detectors"),
        ('[source]\nsource_separation_d = "0.05mm"\n', "source_separation_d"),
        ('[source]\nemitters_per_spot = "many"\n', "emitters_per_spot"),
        ('[source]\npolarization = "circular"\n', "polarization"),
        ('[scan]\nmode = "spiral"\n', "mode"),
        ('[monte_carlo]\namplitude_model = "poisson"\n', "amplitude_model"),
        ("[source\n", "config"),
    ],
)
def test_invalid_config_names_key(tmp_path, text, field):
    path = tmp_path / "c.toml"
    path.write_text(text)
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.field == field


def test_unreadable_config_is_oserror(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.toml")


@given(
    s=st.floats(0.01e-3, 0.5e-3),
    z=st.floats(0.1, 10.0),
    seed=st.integers(0, 2**63),
    pol=st.sampled_from(["parallel", "orthogonal"]),
)
def test_sections_round_trip(s, z, seed, pol):
    cfg = reference_paper_config(spot_size_s=s, distance_z=z, seed=seed, polarization=pol)
    plan = ScanPlan.grid("opposite", -1e-3, 1e-3, 0.25e-3)
    loaded = from_sections(json.loads(json.dumps(to_sections(cfg, plan, "phasor"))))
    assert loaded.experiment == cfg
    assert loaded.amplitude_model == "phasor"
    np.testing.assert_array_equal(loaded.plan(ScanPlan("opposite", [0.0])).positions, plan.positions)


def test_manifest_round_trip(tmp_path):
    cfg = reference_paper_config(seed=99, realizations=1234)
    data = tmp_path / "out.csv"
    data.write_text("x\n")
    path = write_manifest(
        tmp_path / "out.manifest", config_echo=to_sections(cfg), command="twophoton montecarlo",
        artifact_paths=[data], wall_time=1.5, tool_version="0.1.0", master_seed=cfg.seed,
    )
    body = json.loads(path.read_text())
    assert set(body) == {"command", "tool_version", "master_seed", "wall_time", "artifact_paths", "config_echo"}
    assert body["master_seed"] == 99
    assert load_config(path).experiment == cfg


def test_manifest_refuses_missing_outputs(tmp_path):
    with pytest.raises(FileNotFoundError):
        write_manifest(
            tmp_path / "m.manifest", config_echo={}, command="x", artifact_paths=[tmp_path / "nope.csv"],
            wall_time=0.0, tool_version="0.1.0", master_seed=1,
        )
    assert not (tmp_path / "m.manifest").exists()


def test_csv_format_and_round_trip(tmp_path):
    x = np.array([-1e-3, 0.0, 1.7e-3 / 3])
    g = np.array([1.0 + 1e-16, 2.0, np.pi])
    path = write_csv(tmp_path / "a.csv", MONTECARLO_COLUMNS, [(a, b, 0.1, 200000) for a, b in zip(x, g)])
    raw = path.read_bytes()
    assert raw.startswith(b"x_m,g2_normalized,stderr,n_realizations\n")
    assert raw.endswith(b"\n") and b"\r" not in raw
    assert all(line.count(b",") == 3 for line in raw.splitlines())
    assert b",200000\n" in raw
    back = read_csv(path)
    assert back["x_m"].tobytes() == x.tobytes()
    assert back["g2_normalized"].tobytes() == g.tobytes()
    assert ANALYTIC_COLUMNS == ("x_m", "g2_normalized", "g2_raw")


def test_svg_structure(tmp_path):
    x = np.linspace(-3e-3, 3e-3, 25)
    series = [
        Series("analytic", x, 1 + np.cos(x / 1e-3) ** 2, peaks=[0.0]),
        Series("mc", x, 1 + np.cos(x / 1e-3) ** 2, err=np.full(25, 0.01), kind="points"),
    ]
    path = write_svg(tmp_path / "p.svg", series, title="t & <g2>")
    root = ET.parse(path).getroot()
    assert root.tag == f"{SVG}svg"
    assert len(root.findall(f"{SVG}polyline")) == 1
    markers = [g for g in root.iter(f"{SVG}g") if g.get("class") == "markers"]
    assert len(markers) == 1
    assert len(markers[0].findall(f"{SVG}circle")) == 25
    texts = [t.text for t in root.iter(f"{SVG}text")]
    assert "x (mm)" in texts and "t & <g2>" in texts
