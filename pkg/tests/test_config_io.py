import numpy as np
import pytest
import yaml

import nldtopo as nt
from nldtopo.cli import main
from nldtopo.config import parse_config
from nldtopo.errors import ConfigError
from nldtopo.mesh import generate_rect
from nldtopo.optimizer import HistoryRow
from nldtopo.output import (
    FileSink,
    read_history,
    read_pgm,
    write_field,
    write_history,
)

EXPLICIT_DOC = """
mesh:
  nx: 12
  ny: 10
  width: 2.0
  height: 1.0
  regions:
    - {tag: clamp, side: left, lo: 0.0, hi: 1.0}
    - {tag: load, side: right, lo: 0.4, hi: 0.6}
problem:
  kind: compliance
  g_max: 0.45
  dirichlet: [[clamp, [0, 1]]]
  traction_tag: load
phases:
  - {scheme: nld, q: 2.0, q_tilde: 1.0, tau: 3.0e-4, dt: 0.7}
stop: {max_steps: 8}
init: full
fixed_material_tags: [clamp, load]
output_dir: null
"""


# ---------------------------------------------------------------------------
# config parsing


def test_minimal_benchmark_document_matches_defaults():
    cfg = parse_config("benchmark: cantilever\n")
    setup = cfg.build()
    ref = nt.benchmark("cantilever")
    assert setup.phases[0].params == ref.phases[0].params
    assert setup.problem.g_max == ref.problem.g_max
    assert setup.mesh.n_nodes == ref.mesh.n_nodes


def test_dt_restriction_cited_on_rejection():
    with pytest.raises(ConfigError, match=r"\(0, 1\)"):
        parse_config("benchmark: cantilever\noverrides: {dt: 1.5}\n")


def test_empty_document_lists_requirements():
    with pytest.raises(ConfigError, match="benchmark"):
        parse_config("")


def test_unknown_keys_rejected_everywhere():
    with pytest.raises(ConfigError, match="colour"):
        parse_config("benchmark: cantilever\ncolour: red\n")
    with pytest.raises(ConfigError, match="overrides"):
        parse_config("benchmark: cantilever\noverrides: {speed: 11}\n")
    bad = EXPLICIT_DOC.replace("init: full", "init: full\nextra_block: {}")
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_benchmark_and_explicit_blocks_are_exclusive():
    doc = "benchmark: cantilever\n" + EXPLICIT_DOC
    with pytest.raises(ConfigError, match="not both"):
        parse_config(doc)


def test_explicit_document_builds_and_runs():
    cfg = parse_config(EXPLICIT_DOC)
    setup = cfg.build()
    assert setup.problem.kind == "compliance"
    assert setup.mesh.domain_width == 2.0
    res = setup.execute()
    assert res.steps == 8


def test_serialize_parse_round_trip_is_idempotent():
    cfg = parse_config(EXPLICIT_DOC)
    again = parse_config(cfg.serialize())
    assert again.data == cfg.data
    assert parse_config(again.serialize()).data == again.data


def test_yaml_error_reports_line():
    with pytest.raises(ConfigError, match="line"):
        parse_config("benchmark: [unclosed\n  - nope\n")


def test_override_init_and_max_steps():
    cfg = parse_config("benchmark: bridge\noverrides: {init: full, max_steps: 5, q: 8}\n")
    setup = cfg.build()
    assert setup.init_kind == "full"
    assert setup.stop.max_steps == 5
    assert setup.phases[0].params.q == 8


# ---------------------------------------------------------------------------
# history and field output


def rows3():
    return [HistoryRow(0, 1.0, 0.25, 0.0, 1.0, 3.25),
            HistoryRow(1, 0.5, -0.125, 0.625, 0.03125, 2.5),
            HistoryRow(2, 1.0 / 3.0, 0.1234567890123456789, 2.0, 1e-3, 1.0)]


def test_history_empty_is_header_only(tmp_path):
    p = tmp_path / "h.csv"
    write_history([], p)
    assert p.read_text() == "step,objective,constraint,lambda,linf_update,wall_ms\n"


def test_history_three_rows_four_lines(tmp_path):
    p = tmp_path / "h.csv"
    write_history(rows3(), p)
    assert len(p.read_text().strip().splitlines()) == 4


def test_history_round_trip_numerically_identical(tmp_path):
    p = tmp_path / "h.csv"
    rows = rows3()
    write_history(rows, p)
    back = read_history(p)
    for a, b in zip(rows, back):
        assert a.step == b.step
        assert a.objective == b.objective
        assert a.constraint == b.constraint
        assert a.lam == b.lam
        assert a.linf_update == b.linf_update
        assert a.wall_ms == b.wall_ms


def test_pgm_extremes_and_round_trip(tmp_path):
    mesh = generate_rect(6, 4, 1.0, 1.0)
    p_full = tmp_path / "full.pgm"
    write_field(mesh, np.ones(mesh.n_nodes), p_full, format="pgm")
    img = read_pgm(p_full)
    assert img.shape == (5, 7)
    assert np.all(img == 255)
    p_void = tmp_path / "void.pgm"
    write_field(mesh, -np.ones(mesh.n_nodes), p_void, format="pgm")
    assert np.all(read_pgm(p_void) == 0)


def test_pgm_orientation_top_row_first(tmp_path):
    mesh = generate_rect(4, 4, 1.0, 1.0)
    phi = np.where(mesh.nodes[:, 1] >= 0.5, 1.0, -1.0)
    p = tmp_path / "half.pgm"
    write_field(mesh, phi, p, format="pgm")
    img = read_pgm(p)
    assert np.all(img[0] == 255)      # top of the domain
    assert np.all(img[-1] == 0)


def test_vtk_counts_and_field_length_check(tmp_path):
    mesh = generate_rect(3, 2, 1.0, 1.0)
    p = tmp_path / "f.vtk"
    write_field(mesh, np.linspace(-1, 1, mesh.n_nodes), p)
    text = p.read_text().splitlines()
    assert f"POINTS {mesh.n_nodes} double" in text
    assert f"POINT_DATA {mesh.n_nodes}" in text
    assert f"CELLS {mesh.n_elements} {4 * mesh.n_elements}" in text
    with pytest.raises(ConfigError):
        write_field(mesh, np.ones(3), tmp_path / "bad.vtk")
    with pytest.raises(ConfigError):
        write_field(mesh, np.ones(mesh.n_nodes), tmp_path / "bad.xyz", format="xyz")


def test_field_files_byte_identical_across_writes(tmp_path):
    mesh = generate_rect(5, 5, 1.0, 1.0)
    rng = np.random.default_rng(0)
    phi = rng.uniform(-1, 1, mesh.n_nodes)
    a, b = tmp_path / "a.vtk", tmp_path / "b.vtk"
    write_field(mesh, phi, a)
    write_field(mesh, phi, b)
    assert a.read_bytes() == b.read_bytes()


def test_file_sink_cadence_and_flush(tmp_path):
    s = nt.benchmark("cantilever", nx=16, ny=10)
    from dataclasses import replace
    s = replace(s, stop=replace(s.stop, max_steps=22))
    sink = FileSink(tmp_path / "run", s.mesh, s.smoothing, snapshot_every=10)
    res = s.execute(sink=sink)
    sink.close()
    hist = read_history(tmp_path / "run" / "history.csv")
    assert len(hist) == res.steps
    pgms = sorted((tmp_path / "run").glob("snap_*.pgm"))
    steps = [int(p.stem.split("_")[1]) for p in pgms]
    assert steps == [0, 10, 20, 22]


# ---------------------------------------------------------------------------
# command line


def test_cli_requires_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_cli_benchmark_run(tmp_path, capsys):
    code = main(["benchmark", "cantilever", "--q", "4", "--nx", "16", "--ny", "10",
                 "--max-steps", "5", "--out", str(tmp_path / "out")])
    out = capsys.readouterr().out
    assert code == 0
    assert "stop reason" in out and "steps=5" in out
    assert (tmp_path / "out" / "history.csv").exists()
    assert (tmp_path / "out" / "snap_000000.pgm").exists()


def test_cli_run_config_and_bad_config(tmp_path, capsys):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("benchmark: cantilever\nnx: 16\nny: 10\n"
                   "overrides: {max_steps: 3}\noutput_dir: " + str(tmp_path / "o") + "\n")
    assert main(["run", str(cfg)]) == 0
    assert (tmp_path / "o" / "history.csv").exists()
    bad = tmp_path / "bad.yaml"
    bad.write_text("benchmark: cantilever\noverrides: {dt: 1.5}\n")
    assert main(["run", str(bad)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_cli_sweep_grid(tmp_path, capsys):
    cfg = tmp_path / "sweep.yaml"
    cfg.write_text("benchmark: cantilever\nnx: 16\nny: 10\noverrides: {max_steps: 2}\n")
    code = main(["sweep", str(cfg), "--grid", "q=1,2;dt=0.3", "--out", str(tmp_path / "sw")])
    assert code == 0
    dirs = sorted(d.name for d in (tmp_path / "sw").iterdir())
    assert dirs == ["dt0.3_q1", "dt0.3_q2"]
    for d in dirs:
        assert (tmp_path / "sw" / d / "history.csv").exists()
    with pytest.raises(ConfigError):
        from nldtopo.cli import _parse_grid
        _parse_grid("speed=1,2")


def test_cli_history_is_parseable_and_deterministic(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("benchmark: cantilever\nnx: 16\nny: 10\noverrides: {max_steps: 4}\n")
    main(["run", str(cfg), "--out", str(tmp_path / "r1")])
    main(["run", str(cfg), "--out", str(tmp_path / "r2")])
    h1 = read_history(tmp_path / "r1" / "history.csv")
    h2 = read_history(tmp_path / "r2" / "history.csv")
    for a, b in zip(h1, h2):
        assert (a.step, a.objective, a.constraint, a.lam, a.linf_update) == \
               (b.step, b.objective, b.constraint, b.lam, b.linf_update)
    s1 = (tmp_path / "r1" / "snap_000000.pgm").read_bytes()
    s2 = (tmp_path / "r2" / "snap_000000.pgm").read_bytes()
    assert s1 == s2
