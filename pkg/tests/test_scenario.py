import json
import warnings

import pytest

from probe_homodyne import cli
from probe_homodyne import scenario as scn
from probe_homodyne.errors import LeakageAlarm, ScenarioError

BUNDLED = [name for name, _ in scn.list_bundled()]


def _strip(doc):
    doc = dict(doc)
    doc["header"] = {k: v for k, v in doc["header"].items() if k != "timestamp"}
    return doc


def test_bundled_catalogue():
    assert {"vacuum-smoke", "ens-thermal", "nist-thermal", "duan-tmsv", "shot-noise-thermal"} <= set(BUNDLED)


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_cli_run(name, tmp_path, capsys):
    assert cli.main(["run", name, "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / name / "results.json").read_text())
    assert doc["header"]["format"] == scn.RESULTS_FORMAT
    assert doc["results"] and all(r["extracted"] is not None for r in doc["results"])
    assert set(doc["manifest"]["executed_runs"]) >= set(doc["manifest"]["auto_added_runs"])
    assert name in capsys.readouterr().out


def test_deterministic_results(tmp_path):
    sc = scn.load_scenario("shot-noise-thermal")
    docs = []
    for k in range(2):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LeakageAlarm)
            out = scn.run_scenario(sc)
        docs.append(_strip(json.loads(scn.dumps_results(scn.results_document(out)))))
    assert docs[0] == docs[1]


def test_seed_override_changes_sampled_results():
    sc = scn.load_scenario("shot-noise-thermal")
    a = scn.run_scenario(sc).results[0].extracted
    b = scn.run_scenario(scn.with_overrides(sc, seed=sc.seed + 1)).results[0].extracted
    assert a != b


def test_vacuum_smoke_values():
    out = scn.run_scenario(scn.load_scenario("vacuum-smoke"))
    vals = [r.extracted for r in out.results]
    assert vals[:3] == pytest.approx([0, 0, 0], abs=1e-10)
    assert vals[3] == pytest.approx(0.25, abs=1e-9)


def test_auto_added_runs():
    sc = scn.parse_scenario('schema = 1\nname = "t"\ntruncation = 10\n[field]\nkind = "vacuum"\n'
                            '[[observable]]\nname = "X2"\nphi = 0.1\n')
    plan = scn.planned_runs(sc)
    assert plan["declared_runs"] == []
    assert plan["total_preparations"] == 3
    assert any(r.startswith("JC1") for r in plan["auto_added_runs"])


BAD = [
    ('schema = 1\nname = "t"\n[field]\nkind = "vacuum"\ncolour = 3\n', 5),
    ('schema = 1\nname = "t"\n[field]\nkind = "thermal"\nnbar = -1.0\n', 5),
    ('schema = 1\nname = "t"\n[field]\nkind = "tmsv"\nr = 0.3\n[[observable]]\nname = "n"\n', 7),
    ('schema = 1\nname = "t"\n[field]\nkind = "tmsv"\nr = 0.3\n[[run]]\nprobe = "excited"\n'
     'interaction = "JC2"\nprojector = "ground"\n', None),
    ('schema = 1\nname = "t"\n[field]\nkind = "vacuum"\n[noise]\nshots = 100\n[estimator]\nmethod = "richardson"\n',
     None),
    ('schema = 7\nname = "t"\n[field]\nkind = "vacuum"\n', 1),
]


@pytest.mark.parametrize("text,line", BAD)
def test_validation_errors(text, line, tmp_path, capsys):
    with pytest.raises(ScenarioError) as info:
        scn.parse_scenario(text, "bad.toml")
    if line is not None:
        assert info.value.line == line
    path = tmp_path / "bad.toml"
    path.write_text(text)
    assert cli.main(["validate", str(path)]) == 2
    assert cli.main(["run", str(path), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_toml_syntax_error(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text('name = "x\n')
    assert cli.main(["validate", str(path)]) == 2


def test_leakage_exit_code(tmp_path):
    path = tmp_path / "leak.toml"
    path.write_text('schema = 1\nname = "leak"\ntruncation = 8\n[field]\nkind = "coherent"\nalpha = 2.5\n'
                    '[[observable]]\nname = "n"\n')
    assert cli.main(["run", str(path), "--out", str(tmp_path)]) == 3


def test_leakage_alarm_policy(tmp_path):
    body = ('name = "alarm"\ntruncation = 12\nleakage_tol = 1e-2\n{policy}[field]\nkind = "coherent"\nalpha = 1.2\n'
            '[[observable]]\nname = "n"\n')
    path = tmp_path / "alarm.toml"
    path.write_text("schema = 1\n" + body.format(policy=""))
    assert cli.main(["run", str(path), "--out", str(tmp_path)]) == 3
    path.write_text("schema = 1\n" + body.format(policy='on_leakage = "warn"\n'))
    assert cli.main(["run", str(path), "--out", str(tmp_path)]) == 0


def test_validate_and_list(capsys):
    assert cli.main(["validate", "vacuum-smoke", "duan-tmsv"]) == 0
    out = capsys.readouterr().out
    assert out.count("ok:") == 2
    assert cli.main(["list-bundled"]) == 0
    assert "ens-thermal" in capsys.readouterr().out


def test_compare(tmp_path, capsys):
    assert cli.main(["compare", "coherent-quadratures", "--seeds", "3", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    for m in ("central_fd", "richardson", "polyfit", "kernel_integral"):
        assert m in out
    doc = json.loads((tmp_path / "coherent-quadratures" / "compare.json").read_text())
    assert doc


def test_series_written(tmp_path):
    assert cli.main(["run", "vacuum-smoke", "--out", str(tmp_path)]) == 0
    csvs = list((tmp_path / "vacuum-smoke" / "series").glob("*.csv"))
    assert csvs and csvs[0].read_text().startswith("# projector:")


def test_jobs_match_serial(tmp_path):
    sc = scn.load_scenario("coherent-quadratures")
    a = scn.results_document(scn.run_scenario(sc), "t")
    b = scn.results_document(scn.run_scenario(sc, jobs=4), "t")
    assert a == b
