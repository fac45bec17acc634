import json
import math

import pytest
import yaml

from src.config import CORPUS_DIR
from src.data.symbolic import CoordinatePartition
from src.harness.cli import EXIT_BUDGET, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, main
from src.harness.experiment import (
    Expectation,
    list_corpus,
    load_experiment,
    parse_experiment,
)
from src.harness.runner import (
    FAMILIES,
    CheckResult,
    SuiteResult,
    emit_plot_data,
    run_experiment,
    run_paper_suite,
    select_families,
)
from src.lattice.semigroup import standard_system
from src.models.metric_entropy import receptive_metric_sequence
from src.models.topological_entropy import separated_entropy_sequence
from src.utils.config import Config
from src.utils.data_transformations import read_table
from src.utils.errors import ConfigError, EntropyError

LOG2 = math.log(2)
CORPUS = sorted(p.stem for p in CORPUS_DIR.glob("*.yaml"))


def metric_doc(**extra):
    doc = {"name": "probe", "command": "metric", "system": {"kind": "full_shift", "r": 2}, "n_max": 10}
    doc.update(extra)
    return doc


def write_doc(tmp_path, doc):
    path = tmp_path / f"{doc['name']}.yaml"
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def test_corpus_is_listed():
    assert list_corpus() == CORPUS
    assert {"example_2_5", "trivial", "doubling_rejected"} <= set(CORPUS)


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_documents_validate(name):
    experiment = load_experiment(name)
    assert experiment.name == name
    assert experiment.expect


@pytest.mark.parametrize("doc, field", [
    (metric_doc(command="entropy"), "command"),
    ({"command": "metric"}, "system"),
    (metric_doc(epsilon_grid=[0.3, 0.25]), "epsilon_grid[1]"),
    (metric_doc(epsilon_grid=[]), "epsilon_grid"),
    (metric_doc(n_max=0), "n_max"),
    (metric_doc(n_max="many"), "n_max"),
    (metric_doc(system={"kind": "spiral"}), "system.kind"),
    (metric_doc(measure={"kind": "bernoulli", "p": ["1/2", "1/3"]}), "measure.p"),
    (metric_doc(measure={"kind": "poisson"}), "measure.kind"),
    (metric_doc(regular={"kind": "standard", "k": 2, "n_max": 10}), "regular.k"),
    (metric_doc(regular={"kind": "standard", "k": 1, "n_max": 5}), "n_max"),
    (metric_doc(regular={"kind": "custom", "k": 1}), "regular"),
    (metric_doc(partition=[[0, 0]]), "partition[0]"),
    (metric_doc(partition=[-1]), "partition[0]"),
    (metric_doc(budgets={"patience": 3}), "budgets.patience"),
    (metric_doc(budgets={"clique": 0}), "budgets.clique"),
    (metric_doc(format="xml"), "format"),
    (metric_doc(units="decibans"), "units"),
    (metric_doc(expect={"estimate": {"value": 1, "provenance": "folklore"}}), "expect.estimate.provenance"),
    (metric_doc(expect={"estimate": {"tol": 1}}), "expect.estimate.value"),
    (metric_doc(command="local"), "seed"),
    (metric_doc(system={"kind": "product", "factors": [{"kind": "full_shift"}]}), "system.factors"),
])
def test_invalid_documents_name_the_field(doc, field):
    with pytest.raises(ConfigError) as info:
        parse_experiment(doc)
    assert info.value.field == field


def test_product_documents_build():
    doc = metric_doc(
        system={"kind": "product", "factors": [{"kind": "full_shift", "r": 2}, {"kind": "full_shift", "r": 3}]},
        measure={"factors": [{"kind": "bernoulli", "p": ["1/4", "3/4"]}, {"kind": "uniform"}]},
        partition=[{"layer": 0, "point": 0}, {"layer": 1, "point": [0]}],
    )
    assert parse_experiment(doc).command == "metric"


def test_overrides_are_validated():
    experiment = parse_experiment(metric_doc())
    assert experiment.with_overrides(n_max=5, seed=None).n_max == 5
    with pytest.raises(ConfigError):
        experiment.with_overrides(fmt="xml")


def test_expectation_tolerances():
    assert Expectation(2.0, 0.01, relative=True).allows(2.019)
    assert not Expectation(2.0, 0.01).allows(2.019)
    assert Expectation(0.0).allows(0.0)


def test_missing_document():
    with pytest.raises(ConfigError) as info:
        load_experiment("no_such_experiment")
    assert info.value.field == "config"


def test_run_trivial_document(tmp_path):
    result = run_experiment(load_experiment("trivial"), tmp_path)
    assert result.exit_status == 0
    assert {c.name for c in result.checks} == {"estimate", "classical_estimate"}
    assert all(c.provenance == "trivial" for c in result.checks)

    sequence = tmp_path / "trivial" / "sequence.csv"
    assert sequence in result.artifacts
    lines = sequence.read_text().splitlines()
    assert "# experiment=trivial" in lines
    assert "# units=nats" in lines
    checks = read_table(tmp_path / "trivial" / "checks.csv")
    assert checks["passed"].to_list() == [True, True]


def test_json_tables_in_bits(tmp_path):
    experiment = parse_experiment(metric_doc(format="json", units="bits",
                                             expect={"estimate": {"value": LOG2, "tol": 1e-9}}))
    result = run_experiment(experiment, tmp_path)
    assert result.exit_status == 0
    document = json.loads((tmp_path / "probe" / "sequence.json").read_text())
    assert document["meta"]["units"] == "bits"
    last = [row for row in document["rows"] if row["normalization"] == "receptive" and row["n"] == 10][0]
    assert last["value"] == pytest.approx(1.1)
    assert last["raw"] == pytest.approx(11.0)
    # checks are compared and written in nats
    checks = json.loads((tmp_path / "probe" / "checks.json").read_text())
    assert checks["meta"]["units"] == "nats"
    assert checks["rows"][0]["observed"] == pytest.approx(LOG2)


def test_failed_expectations_set_the_exit_status(tmp_path):
    experiment = parse_experiment(metric_doc(expect={"estimate": {"value": 1.0, "tol": 0.01}}))
    result = run_experiment(experiment, tmp_path)
    assert result.exit_status == 1
    assert result.failures[0].name == "estimate"
    assert result.summary_lines()[-1] == "0/1 checks passed"


def test_unknown_expectation_names(tmp_path):
    experiment = parse_experiment(metric_doc(expect={"lambda_star": {"value": 1.0}}))
    with pytest.raises(ConfigError) as info:
        run_experiment(experiment, tmp_path)
    assert info.value.field == "expect.lambda_star"


def test_doubling_document_reports_a_witness(tmp_path):
    result = run_experiment(load_experiment("doubling_rejected"), tmp_path)
    assert result.exit_status == 0
    witness = read_table(tmp_path / "doubling_rejected" / "witness.csv")
    assert witness.row(0) == (1, 0, "(3,)")


def test_regularity_beyond_the_budget_is_not_reported(tmp_path):
    Config().override("budgets", "enumeration", 10)
    doc = metric_doc(command="verify", expect={"regular": {"value": 1}})
    with pytest.raises(ConfigError):
        run_experiment(parse_experiment(doc), tmp_path)
    doc = metric_doc(command="verify", expect={"folner_compatible": {"value": 1}})
    assert run_experiment(parse_experiment(doc), tmp_path).exit_status == 0


def test_topo_document(tmp_path):
    doc = metric_doc(command="topo", epsilon_grid=[0.3, 0.15], params={"L": 6, "bruteforce_n_max": 2},
                     expect={"bruteforce_mismatches": {"value": 0}})
    result = run_experiment(parse_experiment(doc), tmp_path)
    assert result.exit_status == 0
    counts = read_table(tmp_path / "probe" / "counts.csv")
    assert set(counts["method"].to_list()) == {"closed_form", "exact_bruteforce"}


def test_plot_data_document(tmp_path):
    result = run_experiment(parse_experiment(metric_doc(command="plot-data")), tmp_path)
    plot = read_table(tmp_path / "probe" / "plot.csv")
    assert set(plot["quantity"].to_list()) == {"metric", "open_cover", "separated"}
    assert plot.height == 4 * 10
    assert result.checks == []


def test_emit_plot_data(tmp_path, full2, uniform2):
    regular = standard_system(1, 20)
    origin = CoordinatePartition.at(0)
    metric = receptive_metric_sequence(full2, uniform2, origin, regular, 20)
    separated = separated_entropy_sequence(full2, regular, 0.3, 20)
    path = emit_plot_data([metric, separated], tmp_path / "plot", "csv", "bits")
    assert path.suffix == ".csv"
    assert any(line.startswith("# series=") for line in path.read_text().splitlines())
    with pytest.raises(EntropyError):
        emit_plot_data([], tmp_path / "empty")
    shorter = receptive_metric_sequence(full2, uniform2, origin, regular, 10)
    with pytest.raises(EntropyError):
        emit_plot_data([metric, shorter], tmp_path / "mismatch")


def test_suite_result_summary():
    result = SuiteResult([
        CheckResult("a", "f", 1.0, 1.0, 0.0, True, "derived"),
        CheckResult("b", "f", 1.0, 0.0, 0.0, False, "literature"),
    ])
    assert result.exit_status == 1
    assert [c.name for c in result.failures] == ["b"]
    assert result.summary_lines()[1].startswith("FAIL f/b")


def test_select_families():
    assert select_families(None) == list(FAMILIES)
    assert select_families("conjugacy, subaction") == ["conjugacy", "subaction"]
    with pytest.raises(ConfigError) as info:
        select_families("conjugacy,astrology")
    assert info.value.field == "filter"


def test_suite_writes_one_table(tmp_path):
    result = run_paper_suite("regular_gatekeeping,product_bounds", tmp_path)
    assert result.exit_status == 0
    table = read_table(tmp_path / "suite.csv")
    assert set(table["family"].to_list()) == {"regular_gatekeeping", "product_bounds"}


CHEAP = {"regular_gatekeeping", "product_bounds", "trivial_action", "conjugacy"}


@pytest.mark.parametrize("family", [
    name if name in CHEAP else pytest.param(name, marks=pytest.mark.slow) for name in FAMILIES
])
def test_reproduction_family_passes(family):
    checks = FAMILIES[family]()
    assert checks
    assert [c.name for c in checks if not c.passed] == []


class TestCommandLine:
    def test_corpus_listing(self, capsys):
        assert main(["corpus"]) == EXIT_OK
        assert "example_2_5" in capsys.readouterr().out.split()

    def test_passing_document(self, tmp_path, capsys):
        assert main(["metric", "--config", "trivial", "--output", str(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "2/2 checks passed" in out
        assert (tmp_path / "trivial" / "checks.csv").exists()

    def test_failing_document(self, tmp_path):
        path = write_doc(tmp_path, metric_doc(expect={"estimate": {"value": 5.0}}))
        assert main(["metric", "--config", path, "--output", str(tmp_path)]) == EXIT_CHECK_FAILED

    def test_command_overrides_the_document(self, tmp_path):
        # the trivial document holds metric expectations that verify does not report
        assert main(["verify", "--config", "trivial", "--output", str(tmp_path)]) == EXIT_CONFIG

    def test_configuration_errors(self, tmp_path):
        assert main(["metric", "--config", "no_such_experiment"]) == EXIT_CONFIG
        assert main(["metric", "--config", "trivial", "--epsilon-grid", "0.25"]) == EXIT_CONFIG
        assert main(["metric", "--config", "example_2_5", "--n-max", "500"]) == EXIT_CONFIG
        assert main(["suite", "--filter", "astrology"]) == EXIT_CONFIG

    def test_budget_exhaustion(self, tmp_path, fresh_cache):
        argv = ["topo", "--config", "full_2_shift_counts", "--budget", "enumeration=16", "--output", str(tmp_path)]
        assert main(argv) == EXIT_BUDGET

    def test_malformed_budget_flag(self):
        with pytest.raises(SystemExit):
            main(["topo", "--config", "full_2_shift_counts", "--budget", "enumeration"])

    def test_suite_with_a_json_summary(self, tmp_path, capsys):
        argv = ["suite", "--filter", "regular_gatekeeping", "--output", str(tmp_path), "--format", "json"]
        assert main(argv) == EXIT_OK
        assert (tmp_path / "suite.json").exists()
        summary = json.loads(capsys.readouterr().out)
        assert summary["failed"] == 0
        assert summary["passed"] == len(summary["checks"]) == 5
