import pytest

from spatialci import harness
from spatialci.cli import EXIT_GATE, EXIT_INVALID, EXIT_OK, main


@pytest.fixture(scope="module")
def standin(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["standin", "--data", str(d / "d.csv"), "--edges", str(d / "e.txt"), "--n", "80", "--seed", "3"]) == EXIT_OK
    return d


def test_dsep_query(capsys):
    assert main(["dsep", "--scenario", "2a", "--query", "Z2 _||_ Y1 | Z1"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "Z2 _||_ Y1 | Z1: d-connected"
    assert main(["dsep", "--scenario", "2a", "--query", "Z2 _||_ Y1 | Z1,U1"]) == EXIT_OK
    assert "d-separated" in capsys.readouterr().out


def test_dsep_backdoor_lists_paths(capsys):
    assert main(["dsep", "--scenario", "2a", "--backdoor", "Z2", "Y1"]) == EXIT_OK
    out = capsys.readouterr().out
    for path in ("Z2 <- U2 - U1 -> Y1", "Z2 - Z1 <- U1 -> Y1", "Z2 - Z1 -> Y1"):
        assert path in out


@pytest.mark.parametrize(
    "argv",
    [
        ["dsep", "--scenario", "2a"],
        ["dsep", "--scenario", "2a", "--query", "Z2 and Y1"],
        ["dsep", "--scenario", "2a", "--query", "Q9 _||_ Y1"],
        ["simulate", "--design", "network-line", "--reps", "0"],
        ["simulate", "--set", "nonsense"],
        ["analyze", "--data", "/nonexistent.csv", "--edges", "/nonexistent.txt"],
    ],
)
def test_validation_errors_exit_2(argv, capsys):
    assert main(argv) == EXIT_INVALID
    assert capsys.readouterr().err.startswith("error:")


def test_missing_column_exit_2(tmp_path, capsys):
    (tmp_path / "d.csv").write_text("z,c\n1,2\n")
    (tmp_path / "e.txt").write_text("1 2\n")
    assert main(["fit", "--data", str(tmp_path / "d.csv"), "--edges", str(tmp_path / "e.txt")]) == EXIT_INVALID
    assert "'y'" in capsys.readouterr().err


def test_simulate_from_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("design = network-line\nscenario_id = 2f\nn_units = 40\nn_replications = 2\nmethods = ols\n")
    out = tmp_path / "t.csv"
    assert main(["simulate", "--config", str(cfg), "--set", "seed=4", "--out", str(out)]) == EXIT_OK
    table = harness.read_table(out)
    assert len(table) == 1 and table.rows[0]["n_reps"] == 2


def test_simulate_all_sets_markdown(capsys):
    assert main(["simulate", "--scenario", "2c", "--n", "40", "--reps", "2", "--methods", "ols", "--all-sets"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2 + 5


def test_reproduce_small_table(tmp_path):
    out = tmp_path / "s1.csv"
    assert main(["reproduce", "--table", "S1", "--reps", "3", "--out", str(out)]) == EXIT_OK
    assert len(harness.read_table(out)) == 5 * len(harness.network_table_variants())


def test_fit_writes_draws_and_reports_gate(standin, tmp_path, capsys):
    out = tmp_path / "draws"
    argv = ["fit", "--data", str(standin / "d.csv"), "--edges", str(standin / "e.txt"), "--log-exposure", "--out", str(out)]
    rc = main(argv + ["--n-iter", "300", "--n-burnin", "100", "--thin", "2", "--keep-u"])
    assert rc in (EXIT_OK, EXIT_GATE)
    assert "split R-hat" in capsys.readouterr().out
    for k in (1, 2):
        assert (out / f"chain{k}.csv").exists() and (out / f"chain{k}.draws").exists() and (out / f"chain{k}_U.csv").exists()


def test_fit_gate_failure_exit_3(standin, tmp_path):
    # two very short chains from dispersed starts cannot pass a 1.02 gate
    argv = ["fit", "--data", str(standin / "d.csv"), "--edges", str(standin / "e.txt"), "--out", str(tmp_path)]
    assert main(argv + ["--n-iter", "30", "--n-burnin", "5", "--thin", "1", "--seed", "1"]) == EXIT_GATE


def test_analyze_report(standin, tmp_path, capsys):
    out = tmp_path / "report.csv"
    argv = ["analyze", "--data", str(standin / "d.csv"), "--edges", str(standin / "e.txt"), "--log-exposure", "--gh-adjacency", "1"]
    assert main(argv + ["--n-iter", "300", "--n-burnin", "100", "--thin", "2", "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "OLS local exposure only" in text and "Bayes, first-degree G/H adjacency" in text
    assert len(out.read_text().strip().splitlines()) == 1 + 3
