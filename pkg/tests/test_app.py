import csv
from pathlib import Path

import pytest

from toposhape.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_IO, EXIT_OK, EXIT_STUCK, main
from toposhape.config import load_config, parse_config
from toposhape.contour import read_contour
from toposhape.errors import ConfigError
from toposhape.topology import count_components_contour

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def history(out):
    with open(out / "history.csv") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def circle_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("circle")
    cfg = write(out, 'preset = "circle"\noutput = "out"\nsnapshot_every = 5\n'
                     'verify_topology = true\n[optimizer]\nmax_iters = 60\n')
    code = main(["run", str(cfg)])
    return code, out / "out"


def test_shipped_configs_parse():
    for path in sorted(CONFIGS.glob("*.toml")):
        cfg = load_config(path)
        assert cfg.barrier.d >= 2 * cfg.grid.h
    ex1 = load_config(CONFIGS / "example1.toml")
    assert ex1.barrier.epsilon == 0.2 and ex1.functional.kind == "perimeter"
    assert ex1.optimizer.alpha_max is not None


@pytest.mark.parametrize("data,needle", [
    ({"preset": "circle", "optimiser": {}}, "optimiser"),
    ({"preset": "circle", "barrier": {"eps": 0.2}}, "eps"),
    ({"preset": "circle", "grid": {"h": 0.1}, "barrier": {"d": 0.15}}, r"d >= 2\*h"),
    ({"preset": "circle", "grid": {"xmin": 0.0}}, "xmin"),
    ({"preset": "nonsense"}, "nonsense"),
    ({"grid": {"xmin": -2, "xmax": 2, "ymin": -2, "ymax": 2, "h": 0.1},
      "barrier": {"d": 0.4, "l": 0.4, "epsilon": 0.2}, "functional": {"kind": "perimeter"}},
     "shapes"),
    ({"preset": "circle", "functional": {"kind": "second_moment", "smoothing_passes": 3}},
     "smoothing_passes"),
    ({"preset": "circle", "constraint": {"area": -1.0}}, "area"),
    ({"preset": "circle", "optimizer": {"max_iters": 2.5}}, "integer"),
])
def test_config_errors_name_the_problem(data, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(data)


def test_explicit_shapes_config():
    cfg = parse_config({
        "grid": {"xmin": -4, "xmax": 4, "ymin": -4, "ymax": 4, "h": 0.1},
        "barrier": {"d": 0.4, "l": 0.4, "epsilon": 0.2},
        "functional": {"kind": "domain_integral", "terms": [[1.0, 2, 0], [1.0, 0, 2]]},
        "constraint": {"area": False},
        "shapes": [{"center": [0, 0], "a": 1.5, "b": 1.0, "rotation": 0.3}],
    })
    assert cfg.area is None and cfg.constraint_for(1.0) is None
    assert cfg.functional.weight(1.0, 2.0) == pytest.approx(5.0)
    assert cfg.initial_field().band_width == pytest.approx(0.8)


def test_cli_config_error_exit(tmp_path, capsys):
    cfg = write(tmp_path, 'preset = "circle"\n[barrier]\nd = 0.1\n')
    assert main(["run", str(cfg)]) == EXIT_CONFIG
    assert "barrier.d" in capsys.readouterr().err


def test_circle_run_is_stationary(circle_run):
    code, out = circle_run
    assert code == EXIT_OK
    rows = history(out)
    F0, F1 = float(rows[0]["F"]), float(rows[-1]["F"])
    assert F1 == pytest.approx(F0, rel=0.01)
    summary = (out / "summary.txt").read_text()
    assert "status: converged" in summary


def test_run_outputs(circle_run):
    _, out = circle_run
    for name in ("history.csv", "final_field.txt", "summary.txt", "history.png", "shapes.png",
                 "topology.csv", "contour_0000.txt", "snapshot_0000.svg"):
        assert (out / name).is_file(), name
    svg = (out / "snapshot_0000.svg").read_text()
    assert 'fill-rule="evenodd"' in svg


def test_history_satisfies_step_rule(circle_run):
    _, out = circle_run
    rows = history(out)
    assert list(rows[0]) == ["iter", "F", "H", "F_eps", "alpha", "area", "components", "max_u",
                             "halvings"]
    for r in rows:
        assert float(r["alpha"]) * float(r["max_u"]) <= 0.25 * 0.8


def test_snapshot_contours_match_logged_components(circle_run):
    _, out = circle_run
    logged = {int(r["iter"]): int(r["components"]) for r in history(out)}
    snaps = sorted(out.glob("contour_*.txt"))
    assert len(snaps) >= 2
    for path in snaps:
        it = int(path.stem.split("_")[1])
        assert count_components_contour(read_contour(path)) == logged[it]


def test_inspect(circle_run, capsys):
    _, out = circle_run
    assert main(["inspect", str(out / "final_field.txt")]) == EXIT_OK
    text = capsys.readouterr().out
    assert "components_pos: 1" in text and "holes: 0" in text
    assert "eikonal_residual" in text


def test_stuck_exit(tmp_path, capsys):
    cfg = write(tmp_path, 'preset = "dumbbell(neck=0.6)"\noutput = "out"\n')
    assert main(["run", str(cfg), "--no-figures"]) == EXIT_STUCK
    assert "increase epsilon or decrease the grid size" in capsys.readouterr().err
    assert "status: stuck" in (tmp_path / "out" / "summary.txt").read_text()


def test_io_errors(tmp_path):
    assert main(["run", str(tmp_path / "missing.toml")]) == EXIT_IO
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    cfg = write(tmp_path, f'preset = "circle"\noutput = "{blocker / "out"}"\n')
    assert main(["run", str(cfg), "--max-iters", "1"]) == EXIT_IO
    assert main(["inspect", str(tmp_path / "nope.txt")]) == EXIT_IO


def test_validate_commands(capsys):
    assert main(["validate", "--list"]) == EXIT_OK
    listed = set(capsys.readouterr().out.split())
    assert {"circle_H", "circle_U1U2", "two_hole_U1", "eikonal", "contour_length"} <= listed
    assert main(["validate"]) == EXIT_OK
    assert main(["validate", "no_such_suite"]) == EXIT_CONFIG


def test_validate_detects_flipped_repulsion(capsys):
    assert main(["validate", "repulsion", "--inject-u1-sign-flip"]) == EXIT_FAILED
    assert "FAIL  repulsion" in capsys.readouterr().out
