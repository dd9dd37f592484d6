import numpy as np
import pytest

from lowbit import bench
from lowbit.bench import (
    BenchPlan,
    RatioTable,
    Timing,
    emit_report,
    main,
    parse_markdown,
    ratio_table,
    run_bench,
)
from lowbit.errors import InvalidPlan

TINY = dict(heights=(20,), widths=(9,), depths=(40,), inner_repeats=1, outer_repeats=2)


def test_single_mode_table_is_unit():
    result = run_bench(BenchPlan(modes=("f32",), **TINY))
    assert result.table.modes == ("f32",)
    assert result.table.ratios.tolist() == [[1.0]]
    assert emit_report(result.table, "csv") == "mode,f32\nf32,1.00\n"


def test_all_modes_diagonal_and_timings():
    plan = BenchPlan(heights=(20,), widths=(9,), depths=(40, 300), inner_repeats=1, outer_repeats=2)
    result = run_bench(plan)
    assert (np.diag(result.table.ratios) == 1.0).all()
    assert ("u4", (20, 9, 300)) not in result.timings  # deeper than k_max(4, 16)
    assert ("u4", (20, 9, 40)) in result.timings
    assert len(result.timings) == 6 * 2 - 1
    for t in result.timings.values():
        assert len(t.medians) == 2 and t.mean > 0 and t.stderr >= 0


def test_ratio_definition():
    sizes = [(1, 1, 1), (2, 2, 2)]
    timings = {
        ("f32", sizes[0]): Timing((4.0, 4.0)),
        ("f32", sizes[1]): Timing((9.0,)),
        ("bnn", sizes[0]): Timing((1.0, 3.0)),
        ("bnn", sizes[1]): Timing((3.0,)),
    }
    table = ratio_table(("f32", "bnn"), timings)
    assert table.entry("f32", "bnn") == pytest.approx((4 / 2 + 9 / 3) / 2)
    assert table.entry("bnn", "f32") == pytest.approx((2 / 4 + 3 / 9) / 2)
    assert table.entry("bnn", "bnn") == 1.0


def test_csv_golden():
    table = RatioTable(("f32", "bnn"), np.array([[1.0, 10.94], [0.0934, 1.0]]))
    assert emit_report(table, "csv") == "mode,f32,bnn\nf32,1.00,10.9\nbnn,0.0934,1.00\n"


def test_three_significant_digits():
    table = RatioTable(("a", "b"), np.array([[1.0, 123.4], [0.001234, 1.0]]))
    assert emit_report(table, "csv").splitlines()[1:] == ["a,1.00,123", "b,0.00123,1.00"]


def test_markdown_golden_and_round_trip():
    table = RatioTable(("f32", "tnn", "bnn"), np.array([[1.0, 3.63, 10.9], [0.28, 1.0, 2.99], [0.093, 0.34, 1.0]]))
    text = emit_report(table, "markdown")
    assert text.splitlines()[0] == "| B \\ A | F32 | TNN | BNN |"
    assert text.splitlines()[3] == "| TNN | 0.280 | 1.00 | 2.99 |"
    back = parse_markdown(text)
    assert back.modes == table.modes
    assert (back.ratios == table.ratios).all()
    assert emit_report(back, "markdown") == text


def test_reports_are_deterministic():
    table = RatioTable(("f32", "u8"), np.array([[1.0, 1.4444], [0.6923, 1.0]]))
    assert emit_report(table) == emit_report(RatioTable(table.modes, table.ratios.copy()))


def test_unknown_format():
    with pytest.raises(ValueError):
        emit_report(RatioTable(("f32",), np.ones((1, 1))), "json")


@pytest.mark.parametrize("bad", [
    {"modes": ()},
    {"modes": ("f64",)},
    {"modes": ("f32", "f32")},
    {"heights": ()},
    {"depths": (0,)},
    {"inner_repeats": 0},
    {"outer_repeats": 0},
    {"modes": ("u4",), "depths": (512,)},
    {"modes": ("bnn",), "depths": (40000,)},
])
def test_invalid_plans(bad):
    with pytest.raises(InvalidPlan):
        BenchPlan(**({"modes": ("f32",)} | bad))


class TestCli:
    ARGS = ["--heights", "20", "--widths", "9", "--depths", "40", "--inner", "1", "--outer", "1", "--quiet"]

    def test_success_writes_csv(self, tmp_path):
        out = tmp_path / "r.csv"
        assert main(["--modes", "tnn,bnn,f32", *self.ARGS, "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "mode,tnn,bnn,f32"
        assert [line.split(",")[0] for line in lines[1:]] == ["tnn", "bnn", "f32"]

    def test_markdown_to_stdout(self, capsys):
        assert main(["--modes", "u8,u4", *self.ARGS, "--format", "markdown"]) == 0
        assert parse_markdown(capsys.readouterr().out).modes == ("u8", "u4")

    def test_invalid_plan_exit_code(self, capsys):
        assert main(["--modes", "f32,xnor", *self.ARGS]) == 2
        assert "invalid plan" in capsys.readouterr().err

    def test_oracle_failure_exit_code(self, monkeypatch, capsys):
        real = bench.make_case

        def broken(mode, rng, size):
            call, _ = real(mode, rng, size)
            return call, lambda out: False

        monkeypatch.setattr(bench, "make_case", broken)
        assert main(["--modes", "bnn", *self.ARGS]) == 3
        assert "oracle" in capsys.readouterr().err

    def test_comparison_printed(self, capsys):
        assert main(["--modes", "f32,bnn", *self.ARGS[:-1]]) == 0
        err = capsys.readouterr().err
        assert "Cortex-A73" in err and "bnn:" in err and "10.9" in err
