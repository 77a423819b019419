import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest

from heatlab.errors import ConfigError, RegimeError, SimulationWarning, UnknownCheckError
from heatlab.models import GeometricGrid, PathBatch, ReportRow, SeriesTable, ValidationReport
from heatlab.processors import process_models as pm
from heatlab.processors import renewal
from heatlab.schemas.campaign import GridsSection
from heatlab.services import campaign
from heatlab.services.config_loader import parse_campaign
from heatlab.services.plotdata import emit_plotdata, load_report, parse_series, render_series
from heatlab.services.tables_io import (
    REPORT_COLUMNS,
    read_csv,
    read_renewal_table,
    read_report_csv,
    write_path_batch,
    write_renewal_table,
    write_report_csv,
    write_summary,
)

FAST_RENEWAL = """
[renewal]
lo = 0.01
hi = 100.0
per_decade = 4
"""


def campaign_text(kind="stable", alpha=1.0, checks=(), extra=""):
    listed = ", ".join(f'"{c}"' for c in checks)
    return f'seed = 1\nchecks = [{listed}]\n[model]\nkind = "{kind}"\nalpha = {alpha}\n' + FAST_RENEWAL + extra


def sample_report():
    return ValidationReport(
        metadata={"model": "stable(d=1, alpha=1.0)", "seed": "1"},
        rows=[
            ReportRow("eigen-bracket", "t in [1, 2] x 8", 0.25, 4.0, 16.0, "pass", "abc123", "rate 1.2; bracket, wide"),
            ReportRow("overshoot", "", 0.0, 0.0, 100.0, "skipped", "abc123", "needs a ball", runtime=0.5),
        ],
        series={
            "eigen-bracket": SeriesTable(("t", "empirical", "fit"), ("time", "probability", "probability"),
                                         ((1.0, 0.5, 0.49), (2.0, 0.25, 0.26))),
        },
    )


# ----------------------------
# Artifacts
# ----------------------------
def test_report_csv_round_trip(tmp_path):
    report = sample_report()
    path = write_report_csv(report, tmp_path / "report.csv", echo=["seed = 1"])
    again = read_report_csv(path)
    assert again.rows == report.rows
    assert again.metadata == report.metadata
    meta, header, _ = read_csv(path)
    assert tuple(header) == REPORT_COLUMNS
    assert "config seed = 1" not in meta


def test_renewal_table_round_trip(tmp_path):
    table = renewal.build_renewal_table(pm.stable(1, 1.0), "h-proxy", GeometricGrid(1e-2, 1e2, 4))
    again = read_renewal_table(write_renewal_table(table, tmp_path / "renewal.csv"))
    np.testing.assert_array_equal(again.values, table.values)
    np.testing.assert_array_equal(again.derivative, table.derivative)
    assert again.grid == table.grid
    assert (again.backend, again.fingerprint, again.normalization) == ("h-proxy", table.fingerprint, 1.0)


def test_report_reader_rejects_other_files(tmp_path, exact_table):
    path = write_renewal_table(exact_table, tmp_path / "renewal.csv")
    with pytest.raises(ConfigError):
        read_report_csv(path)


def test_summary_lists_every_row(tmp_path):
    text = write_summary(sample_report(), tmp_path / "summary.txt").read_text()
    assert "eigen-bracket" in text and "overshoot" in text
    assert text.rstrip().endswith("2 rows, 0 failed, 1 skipped: PASS")


def test_path_batch_columns(tmp_path):
    batch = PathBatch(
        tau=np.array([0.5, math.inf]),
        kind=np.array([1, 0], dtype=np.int8),
        exit_position=np.array([[1.5, 0.0], [np.nan, np.nan]]),
        pre_exit_position=np.zeros((2, 2)),
        final_position=np.array([[np.nan, np.nan], [0.1, 0.2]]),
    )
    meta, header, rows = read_csv(write_path_batch(batch, tmp_path / "paths.csv"))
    assert header == ["tau", "kind", "exit_0", "exit_1", "final_0", "final_1"]
    assert [r[1] for r in rows] == ["jump", "none"]
    assert meta["n_paths"] == "2"


def test_plot_data_header_and_rows():
    series = sample_report().series["eigen-bracket"]
    text = render_series("eigen-bracket", series)
    assert text.splitlines()[:3] == [
        "# check: eigen-bracket",
        "# columns: t empirical fit",
        "# units: time probability probability",
    ]
    assert parse_series(text) == ("eigen-bracket", series)


def test_emit_plotdata(tmp_path):
    report = sample_report()
    out = tmp_path / "eigen.dat"
    text = emit_plotdata(report, "eigen-bracket", out)
    assert out.read_text() == text
    with pytest.raises(UnknownCheckError) as info:
        emit_plotdata(report, "overshoot")
    assert info.value.available == ["eigen-bracket"]


# ----------------------------
# Driver
# ----------------------------
def fake_context():
    return SimpleNamespace(grids=GridsSection(), config_hash="feed")


def fake_result(ratios, passed=None):
    return campaign.CheckResult(
        grid="g", ratios=np.asarray(ratios, float), ceiling=100.0, series=SeriesTable(("x",), ("-",)), passed=passed
    )


@pytest.mark.parametrize(
    "ratios,status",
    [([1.0, 50.0], "pass"), ([0.01, 5.0], "fail"), ([], "fail")],
)
def test_band_decides_the_status(monkeypatch, ratios, status):
    monkeypatch.setitem(campaign.CHECKS, "overshoot", lambda ctx: fake_result(ratios))
    row, series = campaign.run_check(fake_context(), "overshoot")
    assert row.status == status
    assert row.config_hash == "feed"
    assert series is not None


def test_explicit_verdict_wins(monkeypatch):
    monkeypatch.setitem(campaign.CHECKS, "overshoot", lambda ctx: fake_result([0.01, 5.0], passed=True))
    assert campaign.run_check(fake_context(), "overshoot")[0].status == "pass"


def test_regime_errors_skip_the_check(monkeypatch):
    def outside(ctx):
        raise RegimeError("outside the window", window=(1.0, 1.0))

    monkeypatch.setitem(campaign.CHECKS, "envelope-sandwich", outside)
    row, series = campaign.run_check(fake_context(), "envelope-sandwich")
    assert (row.status, row.min_ratio, row.max_ratio, row.note) == ("skipped", 0.0, 0.0, "outside the window")
    assert series is None


def test_simulation_warnings_become_notes(monkeypatch):
    def noisy(ctx):
        warnings.warn(SimulationWarning("shrink dt"))
        return fake_result([1.0, 2.0])

    monkeypatch.setitem(campaign.CHECKS, "overshoot", noisy)
    assert "shrink dt" in campaign.run_check(fake_context(), "overshoot")[0].note


def test_empty_campaign_writes_artifacts(tmp_path):
    report = campaign.run_campaign(parse_campaign(campaign_text()), tmp_path)
    assert report.rows == []
    assert report.passed
    assert {p.name for p in tmp_path.iterdir()} == {"report.csv", "summary.txt", "renewal.csv"}


def test_cauchy_oracle_campaign(tmp_path):
    text = campaign_text(checks=["free-kernel-oracle"], extra="[grids]\ntimes = [0.5, 1.0]\nradii = [0.0, 1.0, 10.0]\n")
    loaded = parse_campaign(text)
    report = campaign.run_campaign(loaded, tmp_path)
    (row,) = report.rows
    assert row.status == "pass"
    assert row.config_hash == loaded.config_hash
    assert 1.0 / campaign.ORACLE_CEILING <= row.min_ratio <= row.max_ratio <= campaign.ORACLE_CEILING

    again = load_report(tmp_path / "report.csv")
    assert again.rows == report.rows
    assert again.series["free-kernel-oracle"].columns == ("t", "r", "p_free", "oracle")
    assert len(again.series["free-kernel-oracle"].rows) == 6


def test_oracle_is_skipped_for_other_laws(tmp_path):
    report = campaign.run_campaign(parse_campaign(campaign_text(alpha=1.5, checks=["free-kernel-oracle"])), tmp_path)
    (row,) = report.rows
    assert row.status == "skipped"
    assert (row.min_ratio, row.max_ratio) == (0.0, 0.0)
    assert report.passed
    assert not (tmp_path / "free-kernel-oracle.dat").exists()


def test_envelope_sandwich_series(tmp_path):
    text = campaign_text(alpha=1.5, checks=["envelope-sandwich"], extra="[grids]\ntimes = [0.5, 2.0]\nradii = [0.0, 1.0, 4.0]\n")
    report = campaign.run_campaign(parse_campaign(text), tmp_path)
    (row,) = report.rows
    assert row.status == "pass"
    assert 0 < row.min_ratio <= row.max_ratio
    series = report.series["envelope-sandwich"]
    assert series.columns == ("r", "p_free", "env_lower", "env_upper")
    assert [r[0] for r in series.rows] == [0.0, 1.0, 4.0, 0.0, 1.0, 4.0]
    assert all(low <= p <= up for _, p, low, up in series.rows)


def test_checks_needing_a_domain_skip_on_whole_space(tmp_path):
    text = campaign_text(checks=["eigen-bracket", "survival-factorization", "ikeda-watanabe"])
    report = campaign.run_campaign(parse_campaign(text), tmp_path)
    assert [r.check for r in report.rows] == ["survival-factorization", "eigen-bracket", "ikeda-watanabe"]
    assert {r.status for r in report.rows} == {"skipped"}


def test_coupled_checks_skip_on_whole_space(tmp_path):
    report = campaign.run_campaign(parse_campaign(campaign_text(checks=["bias-control", "domain-monotonicity"])), tmp_path)
    assert [r.check for r in report.rows] == ["domain-monotonicity", "bias-control"]
    assert {r.status for r in report.rows} == {"skipped"}


def test_killed_chapman_kolmogorov_needs_a_segment(tmp_path):
    report = campaign.run_campaign(parse_campaign(campaign_text(checks=["killed-chapman-kolmogorov"])), tmp_path)
    (row,) = report.rows
    assert row.status == "skipped"
    assert "segments" in row.note


def test_free_chapman_kolmogorov_is_one_dimensional():
    ctx = SimpleNamespace(grids=GridsSection(), config_hash="feed", model=pm.stable(2, 1.0))
    row, series = campaign.run_check(ctx, "free-chapman-kolmogorov")
    assert row.status == "skipped"
    assert series is None


def test_v_product_holds_on_the_renewal_table(tmp_path):
    text = campaign_text(checks=["v-product"], extra="[grids]\ntimes = [0.1, 1.0]\nradii = [0.0, 0.5, 2.0]\n")
    report = campaign.run_campaign(parse_campaign(text), tmp_path)
    (row,) = report.rows
    assert row.status == "pass", row.note
    assert 1.0 - 1e-9 <= row.min_ratio <= row.max_ratio <= max(campaign.V_PRODUCT_LAMBDAS) + 2.0
    series = report.series["v-product"]
    assert len(series.rows) == 2 * 2 * len(campaign.V_PRODUCT_LAMBDAS)
    assert all(low <= mid * (1 + 1e-9) <= up * (1 + 1e-9) for *_, low, mid, up in series.rows)


# ----------------------------
# Simulation-backed checks
# ----------------------------
INTERVAL = """
[domain]
kind = "interval"
lo = -1.0
hi = 1.0

[simulation]
epsilon = 0.05
dt = 0.01
n_paths = 4000
t_max = 20.0

[grids]
times = [0.25, 0.5]
distances = [0.25, 0.5]
points = [0.5, 1.0]
bin_width = 0.2
radii = [2.0, 4.0]
"""


@pytest.mark.slow
@pytest.mark.parametrize(
    "check",
    [
        "survival-factorization",
        "kernel-factorization",
        "ub-product",
        "killed-chapman-kolmogorov",
        "domain-monotonicity",
        "eigen-bracket",
        "overshoot",
        "ikeda-watanabe",
        "bias-control",
    ],
)
def test_simulation_checks_on_an_interval(tmp_path, check):
    report = campaign.run_campaign(parse_campaign(campaign_text(checks=[check], extra=INTERVAL)), tmp_path)
    (row,) = report.rows
    assert row.status == "pass", row.note
    assert report.series[check].rows
    assert (tmp_path / f"{check}.dat").exists()


@pytest.mark.slow
def test_free_kernel_agreement_on_whole_space(tmp_path):
    extra = """
[simulation]
epsilon = 0.05
dt = 0.01
n_paths = 4000

[grids]
times = [0.5, 1.0]
radii = [0.0, 1.0, 2.0]
bin_width = 0.5
"""
    report = campaign.run_campaign(parse_campaign(campaign_text(checks=["free-kernel-agreement"], extra=extra)), tmp_path)
    (row,) = report.rows
    assert row.status == "pass", row.note
    assert [r[:2] for r in report.series["free-kernel-agreement"].rows] == [
        (0.5, 0.0), (0.5, 1.0), (0.5, 2.0), (1.0, 0.0), (1.0, 1.0), (1.0, 2.0)
    ]


@pytest.mark.slow
def test_free_kernel_conservation_checks(tmp_path):
    extra = "[grids]\ntimes = [0.5, 1.0]\npoints = [1.0, 3.0]\n"
    checks = ["free-kernel-mass", "free-chapman-kolmogorov"]
    report = campaign.run_campaign(parse_campaign(campaign_text(checks=checks, extra=extra)), tmp_path)
    assert [r.check for r in report.rows] == checks
    for row in report.rows:
        assert row.status == "pass", row.note
        assert 1.0 - 1e-3 <= row.min_ratio <= row.max_ratio <= 1.0 + 1e-3
    assert [r[:2] for r in report.series["free-chapman-kolmogorov"].rows] == [
        (0.5, 0.0), (0.5, 1.0), (0.5, 3.0), (1.0, 0.0), (1.0, 1.0), (1.0, 3.0)
    ]


# ----------------------------
# Acceptance-scale factorizations
# ----------------------------
def model_text(kind: str, alpha: float, dimension: int, checks, body: str, alpha2=None) -> str:
    listed = ", ".join(f'"{c}"' for c in checks)
    second = "" if alpha2 is None else f"alpha2 = {alpha2}\n"
    head = f'seed = 3\nchecks = [{listed}]\n[model]\nkind = "{kind}"\nalpha = {alpha}\n{second}'
    return head + f"dimension = {dimension}\n" + FAST_RENEWAL + body


def survival_grid(n_paths: int, times="[0.05, 0.1, 0.2, 0.3, 0.4, 0.5]",
                  distances="[0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0]", t_max=1.0) -> str:
    return f"""
[simulation]
epsilon = 0.05
dt = 0.01
n_paths = {n_paths}
t_max = {t_max}

[grids]
times = {times}
distances = {distances}
"""


SEGMENT_DOMAIN = '[domain]\nkind = "interval"\nlo = -1.0\nhi = 1.0\n'
DISC_DOMAIN = '[domain]\nkind = "ball"\ncenter = [0.0, 0.0]\nradius = 1.0\n'


def assert_stable_under_doubling(tmp_path, text_for):
    """Both runs pass and each cell moves by less than the summed 3-sigma binomial widths."""
    rows = []
    for n in (4000, 8000):
        report = campaign.run_campaign(parse_campaign(text_for(n)), tmp_path / str(n))
        (row,) = report.rows
        assert row.status == "pass", row.note
        assert 0 < row.min_ratio <= row.max_ratio < math.inf
        rows.append(report.series["survival-factorization"].rows)
    for (t, x, p, *_), (t2, x2, q, *_) in zip(*rows):
        assert (t, x) == (t2, x2)
        spread = 3.0 * (math.sqrt(p * (1 - p) / 4000) + math.sqrt(q * (1 - q) / 8000)) + 3.0 / 4000
        assert abs(p - q) <= spread


@pytest.mark.slow
def test_stable_survival_on_a_segment_under_path_doubling(tmp_path):
    assert_stable_under_doubling(
        tmp_path,
        lambda n: model_text("stable", 1.5, 1, ["survival-factorization"], SEGMENT_DOMAIN + survival_grid(n)),
    )


@pytest.mark.slow
def test_stable_survival_on_a_disc_under_path_doubling(tmp_path):
    assert_stable_under_doubling(
        tmp_path,
        lambda n: model_text("stable", 1.5, 2, ["survival-factorization"], DISC_DOMAIN + survival_grid(n)),
    )


@pytest.mark.slow
def test_exterior_ball_survival_for_a_sum_of_stables(tmp_path):
    domain = '[domain]\nkind = "exterior-ball"\ncenter = [0.0, 0.0]\nradius = 1.0\n'
    assert_stable_under_doubling(
        tmp_path,
        lambda n: model_text(
            "sum-of-stables", 1.0, 2, ["survival-factorization"],
            domain + survival_grid(n, times="[0.5, 2.0, 8.0]", distances="[0.1, 0.5, 2.0]", t_max=8.0),
            alpha2=1.5,
        ),
    )


@pytest.mark.slow
def test_halfline_kernel_factorization(tmp_path):
    body = """
[domain]
kind = "halfspace"

[simulation]
epsilon = 0.05
dt = 0.01
n_paths = 8000
t_max = 2.0

[grids]
times = [0.25, 0.5, 1.0, 2.0]
points = [0.5, 1.0, 2.0]
bin_width = 0.2
"""
    text = model_text("stable", 1.5, 1, ["kernel-factorization"], body)
    report = campaign.run_campaign(parse_campaign(text), tmp_path)
    (row,) = report.rows
    assert row.status == "pass", row.note
    series = report.series["kernel-factorization"]
    assert {r[0] for r in series.rows} == {0.25, 0.5, 1.0, 2.0}
    assert all(low <= f <= up for *_, f, low, up in series.rows)
