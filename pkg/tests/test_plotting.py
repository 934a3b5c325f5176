import pytest

from uplift_sgt.harness import default_entries, run_suite
from uplift_sgt.models import TrainConfig
from uplift_sgt.plotting import (
    plot_fairness,
    plot_gap_closed,
    plot_profits,
    render_suite_figures,
)
from uplift_sgt.simulate import SimConfig

PNG = b"\x89PNG\r\n\x1a\n"


@pytest.fixture(scope="module")
def report():
    entries = default_entries(2, 3, sim=SimConfig(n_individuals=500), train=TrainConfig(max_iters=80))
    return run_suite(entries, [0.05, 0.1])


class TestFigures:
    def test_render_all(self, report, tmp_path):
        paths = render_suite_figures(report, tmp_path / "figs")
        assert [p.name for p in paths] == ["gap_closed.png", "profits.png", "fairness.png"]
        for p in paths:
            assert p.read_bytes()[:8] == PNG

    def test_default_budget_falls_back(self, report, tmp_path):
        trimmed = dict(report, budgets=[0.05])
        assert render_suite_figures(trimmed, tmp_path)[1].exists()

    @pytest.mark.parametrize("fn", [plot_profits, plot_fairness])
    def test_per_budget(self, fn, report, tmp_path):
        assert fn(report, 0.05, tmp_path / "x.png").read_bytes()[:8] == PNG

    def test_bytes_reproducible(self, report, tmp_path):
        a = plot_gap_closed(report, tmp_path / "a.png").read_bytes()
        b = plot_gap_closed(report, tmp_path / "b.png").read_bytes()
        assert a == b

    def test_undefined_summary_skipped(self, report, tmp_path):
        empty = dict(report, summary=[dict(r, mean=None) for r in report["summary"]])
        assert plot_gap_closed(empty, tmp_path / "g.png").exists()
