import json

import numpy as np
import pytest

from active_cover import load_dataset
from active_cover.cli import main
from active_cover.experiment import parse_config
from active_cover.errors import ConfigError


def read_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# active-cover")
    return lines[1].split(","), [l.split(",") for l in lines[2:]]


def test_run_smoke(tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["run", "--learner", "passive", "--n", "100", "--trials", "1", "--out", str(out)]) == 0
    header, rows = read_rows(out / "results.csv")
    assert len(rows) == 1 and rows[0][0] == "passive"
    assert "recall_20" in header
    assert capsys.readouterr().out.startswith("passive: n=100 trials=1")


def test_run_is_byte_identical(tmp_path):
    args = ["run", "--learner", "ucb", "--learner", "offline", "--n", "300", "--trials", "2",
            "--seed", "9", "--m", "20", "--emit-query-logs"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    for rel in ["results.csv", "logs/ucb_n300_t1.csv", "logs/offline_n300_t0.csv"]:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_m_larger_than_n_cites_field(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 50, "learners": [{"kind": "offline", "m": 80}]}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) != 0
    assert "learners[0].m" in capsys.readouterr().err


@pytest.mark.parametrize("raw, field", [
    ({"trials": 0}, "trials"),
    ({"p": 1.5}, "p"),
    ({"learners": [{"kind": "magic"}]}, "learners[0].kind"),
    ({"stop": "never"}, "stop"),
    ({"learners": [{"kind": "ucb", "sigma": -1}]}, "learners[0].sigma"),
])
def test_config_diagnostics(raw, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(raw)
    assert exc.value.field == field


def test_bad_json_reports_position(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"n": [100,\n  ]}')
    assert main(["run", "--config", str(cfg)]) != 0
    assert "line 2" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 100, "trials": 5, "learners": ["passive"]}))
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--trials", "2", "--out", str(out)]) == 0
    assert len(read_rows(out / "results.csv")[1]) == 2


def test_sweep_with_two_sizes_skips_fit(tmp_path, caplog):
    out = tmp_path / "s"
    assert main(["sweep", "--learner", "passive", "--n", "200", "--n", "400",
                 "--trials", "2", "--out", str(out)]) == 0
    assert (out / "sweep.csv").exists() and not (out / "rates.csv").exists()
    assert "rate fit skipped" in caplog.text


def test_sweep_outputs(tmp_path):
    out = tmp_path / "s"
    args = ["sweep", "--n", "200", "--n", "400", "--n", "800", "--trials", "3", "--out", str(out)]
    for k in ("passive", "explore-commit", "oracle-greedy"):
        args += ["--learner", k]
    assert main(args) == 0
    header, rows = read_rows(out / "sweep.csv")
    assert header[:3] == ["kind", "D", "n"] and len(rows) == 9
    _, rates = read_rows(out / "rates.csv")
    assert [r[0] for r in rates] == ["passive", "explore-commit"]
    assert (out / "comparison.txt").read_text().splitlines()[1] == "comparison at n=800"


def test_gen_data_roundtrip(tmp_path):
    path = tmp_path / "pool.csv"
    assert main(["gen-data", "--preset", "cube-overlap", "--dim", "2", "--n", "100",
                 "--seed", "4", "--out", str(path)]) == 0
    lines = path.read_text().splitlines()
    assert lines[1] == "x0,x1,label,in_support" and len(lines) == 102
    first = path.read_bytes()
    assert main(["gen-data", "--n", "100", "--seed", "4", "--out", str(path)]) == 0
    assert path.read_bytes() == first
    ds = load_dataset(path, keep_support=True)
    assert ds.n == 100 and ds.dim == 2 and ds.in_support is not None


def test_gen_data_unwritable(tmp_path):
    assert main(["gen-data", "--n", "5", "--out", str(tmp_path / "missing" / "x.csv")]) != 0


def test_run_on_ingested_data(tmp_path, capsys):
    pool = tmp_path / "pool.csv"
    pool.write_text("x0,label\n0.0,1\n0.1,1\n0.3,0\n0.35,1\n0.9,0\n")
    out = tmp_path / "o"
    assert main(["run", "--data", str(pool), "--learner", "explore-commit", "--m", "1",
                 "--trials", "3", "--out", str(out)]) == 0
    _, rows = read_rows(out / "results.csv")
    assert {r[11] for r in rows} == {"positive-count-lower-bound"}
    assert main(["run", "--data", str(pool), "--learner", "oracle-greedy", "--out", str(out)]) != 0


def _sweep_csv(path, rows):
    text = "# test\nkind,D,n,trials,mean_excess,std_excess,ci_low,ci_high,mean_auc,mean_Q\n"
    text += "".join(f"{k},2,{n},5,{m!r},0,0,0,0.5,0\n" for k, n, m in rows)
    path.write_text(text)


def test_fit_rate_planted(tmp_path):
    src = tmp_path / "sweep.csv"
    ns = [1000, 4000, 16000, 64000]
    _sweep_csv(src, [("offline", n, 3.0 * n ** (2 / 3)) for n in ns]
               + [("passive", 1000, 500.0), ("passive", 4000, 2000.0)])
    assert main(["fit-rate", str(src), "--out", str(tmp_path / "rates.csv")]) == 0
    _, rows = read_rows(tmp_path / "rates.csv")
    assert len(rows) == 1 and rows[0][0] == "offline"
    assert abs(float(rows[0][2]) - 2 / 3) < 1e-9
    assert float(rows[0][7]) == pytest.approx(2 / 3)


def test_fit_rate_empty_and_bad_schema(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    assert main(["fit-rate", str(empty)]) != 0
    bad = tmp_path / "b.csv"
    bad.write_text("kind,n\npassive,100\n")
    assert main(["fit-rate", str(bad)]) != 0


def test_sweep_rows_are_stateless(tmp_path):
    # Re-running only the largest n reproduces that slice of a full sweep.
    full, part = tmp_path / "full", tmp_path / "part"
    base = ["sweep", "--learner", "explore-commit", "--trials", "2", "--seed", "3"]
    assert main(base + ["--n", "200", "--n", "300", "--out", str(full)]) == 0
    assert main(["run", "--learner", "explore-commit", "--trials", "2", "--seed", "3",
                 "--n", "300", "--out", str(part)]) == 0
    full_rows = [r for r in read_rows(full / "results.csv")[1] if r[2] == "300"]
    assert full_rows == read_rows(part / "results.csv")[1]
    assert np.all([len(r) == len(full_rows[0]) for r in full_rows])
