import numpy as np
import pytest

from fedsummary.bench import BenchConfig, BenchReport, MethodResult, run_bench
from fedsummary.datamodel import PopulationSpec, ValidationError
from fedsummary.report import parse_csv_report, render_report, save_figures

DESK_SPEC = PopulationSpec(
    num_clients=25, num_classes=8, feature_dim=32,
    samples_mean=40, samples_std=15, samples_max=120,
    group_count=4, dirichlet_alpha=0.1, seed=3,
)


@pytest.fixture(scope="module")
def report():
    return run_bench(DESK_SPEC, BenchConfig(embed_dim=8, coreset_k=32, seed=3))


class TestRunBench:
    def test_all_methods_reported(self, report):
        assert [m.method for m in report.methods] == ["label", "conditional", "encoder"]

    def test_max_at_least_avg(self, report):
        for m in report.methods:
            assert m.summary_max >= m.summary_avg >= 0.0

    def test_sizes_positive_and_ordered(self, report):
        by_name = {m.method: m for m in report.methods}
        assert 0 < by_name["label"].summary_bytes
        assert by_name["encoder"].summary_bytes < by_name["conditional"].summary_bytes

    def test_encoder_bytes_formula(self, report):
        c, h = DESK_SPEC.num_classes, 8
        header = 4 + 2 + 1 + 2 + len("client-00000") + 4 + 4 + 1 + 4 + 4
        by_name = {m.method: m for m in report.methods}
        assert by_name["encoder"].summary_bytes == header + 4 * (c * h + c)

    def test_rerun_changes_only_timing_fields(self):
        cfg = BenchConfig(embed_dim=8, coreset_k=32, seed=3)
        a = run_bench(DESK_SPEC, cfg)
        b = run_bench(DESK_SPEC, cfg)
        for ma, mb in zip(a.methods, b.methods):
            assert ma.summary_bytes == mb.summary_bytes
            assert (ma.assignments is None) == (mb.assignments is None)
            if ma.assignments is not None:
                assert np.array_equal(ma.assignments, mb.assignments)

    def test_budget_cutoff_marks_method(self):
        cfg = BenchConfig(embed_dim=8, coreset_k=32, summary_budget=1e-9,
                          clustering_budget=1e-3, seed=3)
        report = run_bench(DESK_SPEC, cfg)
        by_name = {m.method: m for m in report.methods}
        assert "cutoff" in by_name["conditional"].note
        assert by_name["conditional"].clients_timed < DESK_SPEC.num_clients

    def test_weighted_variant_adds_row(self):
        cfg = BenchConfig(embed_dim=8, coreset_k=32, weighted_variant=True, seed=3)
        report = run_bench(DESK_SPEC, cfg)
        assert [m.method for m in report.methods][-1] == "encoder-weighted"

    def test_baseline_kmeans_flag(self):
        cfg = BenchConfig(embed_dim=8, coreset_k=32, baseline_kmeans=True, seed=3)
        report = run_bench(DESK_SPEC, cfg)
        by_name = {m.method: m for m in report.methods}
        assert by_name["label"].clustering_method == "kmeans"

    def test_invalid_budget(self):
        with pytest.raises(ValidationError):
            run_bench(DESK_SPEC, BenchConfig(summary_budget=0.0))


class TestRenderReport:
    def test_empty_report_is_header_only(self):
        empty = BenchReport(DESK_SPEC, BenchConfig(), machine="m", methods=[])
        csv_text = render_report(empty, "csv")
        assert csv_text.splitlines() == [
            "method,summary_avg_s,summary_max_s,summary_bytes,"
            "clustering_time_s,clustering_method,clients_timed,note"
        ]

    def test_full_report_has_three_rows(self, report):
        rows = parse_csv_report(render_report(report, "csv"))
        assert len(rows) == 3

    def test_csv_round_trips(self, report):
        rows = parse_csv_report(render_report(report, "csv"))
        for row, m in zip(rows, report.methods):
            assert row["method"] == m.method
            assert float(row["summary_avg_s"]) == m.summary_avg
            assert float(row["summary_max_s"]) == m.summary_max
            assert int(row["summary_bytes"]) == m.summary_bytes
            assert float(row["clustering_time_s"]) == m.clustering_time

    def test_table_format(self, report):
        text = render_report(report, "table")
        assert "method" in text and "encoder" in text and "machine:" in text

    def test_unknown_format_rejected(self, report):
        with pytest.raises(ValueError):
            render_report(report, "yaml")


class TestFigures:
    def test_figures_written(self, report, tmp_path):
        paths = save_figures(report, tmp_path)
        assert sorted(p.name for p in paths) == [
            "clustering_times.png", "summary_sizes.png", "summary_times.png",
        ]
        for p in paths:
            assert p.stat().st_size > 0
