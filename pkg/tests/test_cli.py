import csv
import io
import json

from cpevolve.cli import main
from cpevolve.fwa import FwaParams, run_fwa
from cpevolve.tsp import serialize_tsplib, tour_length

from conftest import random_instance


def test_bench_csv(tmp_path, capsys):
    inst_path = tmp_path / "r9.tsp"
    inst_path.write_text(serialize_tsplib(random_instance(9, 2)))
    registry = tmp_path / "known.txt"
    registry.write_text("rand9-2 1\n")
    out = tmp_path / "gaps.csv"
    assert main(["bench", str(inst_path), "--budget", "500", "--registry", str(registry), "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert rows[0]["instance"] == "rand9-2" and rows[0]["n"] == "9" and rows[0]["evaluations"] == "500"
    length = float(rows[0]["length"])
    assert rows[0]["gap_percent"] == f"{(length - 1) * 100:.2f}"
    assert capsys.readouterr().out == out.read_text()


def test_bench_without_best_known_leaves_gap_blank(tmp_path, capsys):
    inst_path = tmp_path / "r7.tsp"
    inst_path.write_text(serialize_tsplib(random_instance(7, 1)))
    main(["bench", str(inst_path), "--budget", "100"])
    row = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))[0]
    assert row["best_known"] == "" and row["gap_percent"] == ""


def test_render(tmp_path, capsys):
    tour = tmp_path / "tour.txt"
    tour.write_text(" ".join(map(str, range(51))))
    assert main(["render", "--instance", "eil51", "--tour", str(tour), "--out-dir", str(tmp_path), "--id", "t"]) == 0
    for kind in ("route", "crossing_heatmap", "density"):
        assert (tmp_path / f"t_{kind}.png").stat().st_size > 0
    assert "crossing_count=" in capsys.readouterr().out


def test_evolve_tsp_then_analyze(tmp_path, capsys):
    inst_path = tmp_path / "r10.tsp"
    inst_path.write_text(serialize_tsplib(random_instance(10, 3)))
    run = tmp_path / "run"
    assert main(["evolve-tsp", "--instance", str(inst_path), "--iterations", "2", "--eval-budget", "200",
                 "--runs", "1", "--visual", "off", "--run-dir", str(run)]) == 0
    pool = json.loads((run / "pool.json").read_text())
    assert 1 <= len(pool["members"]) <= 5
    capsys.readouterr()
    out = tmp_path / "sim.csv"
    assert main(["analyze", "--run-dir", str(run), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == len(pool["members"]) + 1


def test_analyze_groups(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    a.write_text("0.5 0.6 0.7 0.55")
    b.write_text("[0.2, 0.3, 0.25, 0.35]")
    assert main(["analyze", "--groups", str(a), str(b)]) == 0
    out = capsys.readouterr().out
    assert "mean±SD" in out and "Welch t =" in out


def test_evolve_step_null(tmp_path):
    run = tmp_path / "step"
    assert main(["evolve-step", "--cells", "12", "--nets", "15", "--step-iters", "10", "--iterations", "1",
                 "--run-dir", str(run)]) == 0
    assert (run / "history.jsonl").exists() and (run / "s0_placement.png").exists()


def test_bench_reports_float_length(tmp_path, capsys):
    inst_path = tmp_path / "r8.tsp"
    inst = random_instance(8, 4)
    inst_path.write_text(serialize_tsplib(inst))
    main(["bench", str(inst_path), "--budget", "300"])
    row = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))[0]
    tour = run_fwa(inst, FwaParams(rng_seed=0, eval_budget=300)).tour
    assert row["float_length"] == f"{tour_length(inst, tour, 'floating'):.2f}"
