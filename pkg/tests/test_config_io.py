import math
import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spindd.config import DEFAULTS, PRESETS, from_dict, load_config, parse_config
from spindd.diagnostics import CSV_COLUMNS, DiagnosticsRecord, beta_threshold
from spindd.errors import ConfigError, IoError, ParseError
from spindd.output import (CSV_HEADER, MAGIC, emit_outputs, format_value, read_csv,
                           read_snapshot, state_fields, write_csv, write_snapshot)
from spindd.state import SimState, validate_initial

from _support import small_grid


def test_parse_error_location():
    with pytest.raises(ParseError) as info:
        parse_config("{\n  grid: {nx: 32,,}\n}")
    assert (info.value.line, info.value.column) == (2, 18)
    with pytest.raises(ParseError) as info:
        parse_config("{\n  name: 'x',\n  time: {dt: 0.01\n}")
    assert info.value.line == 4


def test_json5_features_accepted():
    cfg = parse_config("""
    // comment
    {grid: {nx: 16, ny: 12,}, reg: {M_trunc: Infinity}, time: {t_end: 0.5}}
    """)
    assert cfg.spec.shape == (12, 16)
    assert math.isinf(cfg.physics["M_trunc"])
    assert cfg.coupling.dt == pytest.approx(0.04 / 16)


@pytest.mark.parametrize("doc,field", [
    ({"domains": {"omega1": [0.0, 0.5, 0.2, 0.8]}}, "domains.omega1"),
    ({"domains": {"omega1": [0.1, 0.5]}}, "domains.omega1"),
    ({"physics": {"tau": -1}}, "physics.tau"),
    ({"physics": {"tau": "fast"}}, "physics.tau"),
    ({"grid": {"nx": 2}}, "grid.nx"),
    ({"time": {"dt": 0.5}}, "time.dt"),
    ({"coupling": {"sigma": 2}}, "coupling.sigma"),
    ({"bc": {"top": "D", "bottom": "D"}}, "bc"),
    ({"bc": {"top": "X"}}, "bc.top"),
    ({"initial": {"profile": "vortex"}}, "initial.profile"),
    ({"initial": {"profile": "zero", "theta": 1}}, "initial.theta"),
    ({"solver": {"llg_scheme": "rk4"}}, "solver.llg_scheme"),
    ({"physic": {}}, "physic"),
    ({"grid": {"nz": 3}}, "grid.nz"),
    ({"seed": 1.5}, "seed"),
])
def test_config_errors_name_the_field(doc, field):
    with pytest.raises(ConfigError) as info:
        from_dict(doc)
    assert info.value.field == field


def test_overlapping_domains():
    with pytest.raises(ConfigError) as info:
        from_dict({"domains": {"omega1": [0.1, 0.5, 0.1, 0.5], "omega2": [0.4, 0.8, 0.4, 0.8]}})
    assert info.value.field == "domains.omega2"


def test_defaults_echo():
    cfg = from_dict({})
    assert cfg.raw == DEFAULTS
    assert cfg.spec.nx == 64 and cfg.coupling.sigma == 1.0
    assert cfg.initial == {"profile": "equilibrium"}


@pytest.mark.parametrize("name", list(PRESETS))
def test_presets_build_valid_states(name):
    cfg = load_config(name)
    grid, params, state = cfg.build()
    rep = validate_initial(state, params, grid, 1e-10)
    assert rep.passed, str(rep)
    assert cfg.name == name


def test_half_threshold_beta():
    grid, params, state = load_config("interlayer").build()
    bmax, ok = beta_threshold(params, 2 * state.rho.max())
    assert params.beta == pytest.approx(0.5 * bmax) and ok


def test_load_from_file(tmp_path):
    p = tmp_path / "c.json5"
    p.write_text("{name: 'file', grid: {nx: 8, ny: 8}}")
    assert load_config(str(p)).name == "file"
    with pytest.raises(OSError):
        load_config(str(tmp_path / "missing.json5"))


def test_csv_header_and_values(tmp_path):
    assert CSV_HEADER == ("t,S,E_total,E_spin,E_em,E_ex,min_rho,max_rho,max_abs_s,max_m_defect,"
                          "resE,resH,picard_iters,beta_ok,diss_rate")
    rec = DiagnosticsRecord(0.1, 1.0, 2.0, 3.0, 4.0, 5.0, 0.5, 1.5, 0.2, 0.0, 1e-16, 0.0, 3,
                            True, math.nan, clamped=True)
    path = tmp_path / "d.csv"
    write_csv(path, [rec, rec])
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER and len(lines) == 3
    assert lines[1].split(",")[12:14] == ["3", "1"]
    header, rows = read_csv(path)
    assert header.split(",") == list(CSV_COLUMNS)
    assert math.isnan(rows[0][-1]) and rows[0][0] == 0.1


def test_empty_stream(tmp_path):
    path = tmp_path / "e.csv"
    write_csv(path, [])
    assert path.read_text() == CSV_HEADER + "\n"


@given(st.floats(allow_nan=False))
def test_format_value_round_trips(x):
    assert float(format_value(x)) == x


def test_snapshot_round_trip(tmp_path):
    g = small_grid(7)
    rng = np.random.default_rng(0)
    st = SimState(rng.random(g.shape), *(rng.random((3,) + g.shape) for _ in range(4)))
    path = tmp_path / "s.sdml"
    write_snapshot(path, state_fields(st))
    nx, ny, fields = read_snapshot(path)
    assert (nx, ny) == (7, 7) and len(fields) == 13
    assert np.array_equal(fields["rho"], st.rho) and np.array_equal(fields["m3"], st.m[2])
    raw = path.read_bytes()
    assert raw.startswith(MAGIC)
    assert struct.unpack_from("<iii", raw, len(MAGIC)) == (7, 7, 13)
    assert len(raw) == len(MAGIC) + 12 + 13 * (16 + 7 * 7 * 8)


def test_snapshot_errors(tmp_path):
    bad = tmp_path / "bad.sdml"
    bad.write_bytes(b"nope")
    with pytest.raises(IoError):
        read_snapshot(bad)
    good = tmp_path / "g.sdml"
    write_snapshot(good, {"a": np.zeros((3, 3))})
    good.write_bytes(good.read_bytes()[:-8])
    with pytest.raises(IoError, match="truncated"):
        read_snapshot(good)
    with pytest.raises(IoError):
        write_snapshot(tmp_path / "x.sdml", {"a": np.zeros((3, 3)), "b": np.zeros((2, 3))})
    with pytest.raises(IoError):
        write_snapshot(tmp_path / "x.sdml", {"a" * 17: np.zeros((3, 3))})
    with pytest.raises(IoError):
        write_snapshot(tmp_path / "no" / "dir" / "x.sdml", {"a": np.zeros((3, 3))})


def test_emit_outputs(tmp_path):
    g = small_grid(5)
    paths = emit_outputs([], [(0, SimState.zeros(g)), (7, SimState.zeros(g))], tmp_path / "o")
    assert [p.rsplit("/", 1)[-1] for p in paths] == ["diagnostics.csv", "snap_000000.sdml",
                                                      "snap_000007.sdml"]


CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("name", list(PRESETS))
def test_shipped_config_files_match_presets(name):
    from_file = load_config(str(CONFIG_DIR / f"{name}.json5"))
    assert from_file.raw == from_dict(PRESETS[name]).raw
