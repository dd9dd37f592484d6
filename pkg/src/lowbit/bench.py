"""Timing harness and ratio-table reports for the GeMM variants.

For every size (H, W, D) and mode the multiplication is timed ``inner``
times and the median kept; that is repeated ``outer`` times and the
medians averaged.  Modes are interleaved inside each outer repeat so slow
drift of the machine affects all of them alike.  Cell (B, A) of the ratio
table is the mean over sizes of T_B / T_A, so entries above 1 mean that the
column mode is faster than the row mode.
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .core import QuantParams
from .errors import InvalidPlan, OracleCheckFailed
from .gemm import (
    LOWBIT_MODES,
    QuantizedGemmInputs,
    encode_a,
    gemm_f32,
    gemm_lowbit,
    gemm_quantized,
    k_max,
    prepack_f32,
    reference_gemm_int,
)
from .kernels import K_MAX_16
from .packing import prepack_b

ALL_MODES = ("f32", "u8", "u4", "tnn", "tbn", "bnn")
DEFAULT_HEIGHTS = (72, 120, 240, 360)
DEFAULT_WIDTHS = (24, 48, 72, 96)
DEFAULT_DEPTHS = (128, 256, 384, 512)

# depth limits: 8-bit inputs into 32-bit sums, 4-bit into 16-bit sums
DEPTH_LIMIT = {
    "f32": None,
    "u8": k_max(8, 32),
    "u4": k_max(4, 16),
    "tnn": K_MAX_16,
    "tbn": K_MAX_16,
    "bnn": K_MAX_16,
}

# Ratios measured on an ARM Cortex-A73 core, rows B / columns A as above.
PUBLISHED_RATIOS = {
    "f32": (1.00, 1.44, 2.52, 3.63, 3.75, 10.9),
    "u8": (0.69, 1.00, 1.75, 2.51, 2.60, 7.52),
    "u4": (0.40, 0.57, 1.00, 1.44, 1.49, 4.32),
    "tnn": (0.28, 0.40, 0.70, 1.00, 1.03, 2.99),
    "tbn": (0.27, 0.39, 0.67, 0.97, 1.00, 2.90),
    "bnn": (0.093, 0.13, 0.23, 0.34, 0.35, 1.00),
}

Size = tuple[int, int, int]


@dataclass(frozen=True)
class BenchPlan:
    modes: tuple[str, ...] = ALL_MODES
    heights: tuple[int, ...] = DEFAULT_HEIGHTS
    widths: tuple[int, ...] = DEFAULT_WIDTHS
    depths: tuple[int, ...] = DEFAULT_DEPTHS
    inner_repeats: int = 5
    outer_repeats: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("modes", "heights", "widths", "depths"):
            value = tuple(getattr(self, name))
            if not value:
                raise InvalidPlan(f"{name} must not be empty")
            object.__setattr__(self, name, value)
        unknown = [m for m in self.modes if m not in ALL_MODES]
        if unknown:
            raise InvalidPlan(f"unknown modes {unknown}; choose from {', '.join(ALL_MODES)}")
        if len(set(self.modes)) != len(self.modes):
            raise InvalidPlan("modes must not repeat")
        if min(self.heights + self.widths + self.depths) < 1:
            raise InvalidPlan("sizes must be positive")
        if self.inner_repeats < 1 or self.outer_repeats < 1:
            raise InvalidPlan("repeat counts must be >= 1")
        for mode in self.modes:
            limit = DEPTH_LIMIT[mode]
            if limit is None:
                continue
            if mode == "u4":
                # deeper sizes are skipped for u4, but something must remain
                if min(self.depths) > limit:
                    raise InvalidPlan(f"u4 needs a depth <= {limit}, got {list(self.depths)}")
            elif max(self.depths) > limit:
                raise InvalidPlan(f"{mode} depth {max(self.depths)} exceeds k_max={limit}")

    def sizes(self) -> list[Size]:
        return [(h, w, d) for h in self.heights for w in self.widths for d in self.depths]

    def runs(self, mode: str, size: Size) -> bool:
        limit = DEPTH_LIMIT[mode]
        return limit is None or size[2] <= limit


@dataclass(frozen=True)
class RatioTable:
    """``ratios[i, j]`` = mean over sizes of T_{modes[i]} / T_{modes[j]}."""

    modes: tuple[str, ...]
    ratios: np.ndarray

    def entry(self, b: str, a: str) -> float:
        return float(self.ratios[self.modes.index(b), self.modes.index(a)])


@dataclass(frozen=True)
class Timing:
    """Per-outer-repeat medians (seconds) for one mode and size."""

    medians: tuple[float, ...]

    @property
    def mean(self) -> float:
        return statistics.fmean(self.medians)

    @property
    def stderr(self) -> float:
        if len(self.medians) < 2:
            return 0.0
        return statistics.stdev(self.medians) / len(self.medians) ** 0.5


@dataclass(frozen=True)
class BenchResult:
    table: RatioTable
    timings: dict[tuple[str, Size], Timing] = field(repr=False)


# -- operands and oracle checks ---------------------------------------------


def _lowbit_case(mode: str, rng: np.random.Generator, h: int, w: int, d: int):
    signs = (-1, 1)
    a = rng.choice(signs, (h, d)) if mode == "bnn" else rng.integers(-1, 2, (h, d))
    b = rng.integers(-1, 2, (d, w)) if mode == "tnn" else rng.choice(signs, (d, w))
    # A arrives bit-encoded, as a previous low-bit layer would leave it;
    # its block packing happens inside the timed call
    encoded = encode_a(a, mode)
    packed = prepack_b(b, mode)

    def call():
        return gemm_lowbit(mode, encoded, packed)

    def check(out):
        return np.array_equal(out, reference_gemm_int(a, b))

    return call, check


def _f32_case(rng: np.random.Generator, h: int, w: int, d: int):
    a = rng.standard_normal((h, d)).astype(np.float32)
    b = rng.standard_normal((d, w)).astype(np.float32)
    packed = prepack_f32(b)

    def call():
        return gemm_f32(a, packed)

    def check(out):
        ref = a.astype(np.float64) @ b.astype(np.float64)
        return float(np.max(np.abs(out - ref))) <= 1e-5 * d

    return call, check


def _quantized_case(bits: int, rng: np.random.Generator, h: int, w: int, d: int):
    qmax = (1 << bits) - 1
    qa = QuantParams(0.05, int(rng.integers(0, qmax)), bits)
    qb = QuantParams(0.02, int(rng.integers(0, qmax)), bits)
    a_hat = rng.integers(0, qmax + 1, (h, d)).astype(np.uint8)
    b_hat = rng.integers(0, qmax + 1, (d, w)).astype(np.uint8)
    b_side = QuantizedGemmInputs(a_hat[:1], b_hat, qa, qb)

    def call():
        inputs = QuantizedGemmInputs(a_hat, b_hat, qa, qb, b_col_sums=b_side.b_col_sums,
                                     b_panels=b_side.b_panels)
        return gemm_quantized(inputs).c_tilde

    def check(out):
        direct = (a_hat.astype(np.int64) - qa.zero_point) @ (b_hat.astype(np.int64) - qb.zero_point)
        return np.array_equal(out, direct)

    return call, check


def make_case(mode: str, rng: np.random.Generator, size: Size) -> tuple[Callable, Callable]:
    """Build operands for ``mode`` and return ``(call, check)``.

    B is packed here, outside the timed call; packing A is part of the call.
    """
    h, w, d = size
    if mode in LOWBIT_MODES:
        return _lowbit_case(mode, rng, h, w, d)
    if mode == "f32":
        return _f32_case(rng, h, w, d)
    if mode == "u8":
        return _quantized_case(8, rng, h, w, d)
    if mode == "u4":
        return _quantized_case(4, rng, h, w, d)
    raise InvalidPlan(f"unknown mode {mode!r}")


# -- measurement ----------------------------------------------------------------


def _median_time(call: Callable, inner: int) -> float:
    samples = []
    for _ in range(inner):
        t0 = time.perf_counter()
        call()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def ratio_table(modes: Sequence[str], timings: dict[tuple[str, Size], Timing]) -> RatioTable:
    """Mean over shared sizes of T_B / T_A; the diagonal is exactly 1."""
    n = len(modes)
    ratios = np.ones((n, n))
    for i, b in enumerate(modes):
        for j, a in enumerate(modes):
            if i == j:
                continue
            shared = [s for (m, s) in timings if m == a and (b, s) in timings]
            ratios[i, j] = statistics.fmean(timings[b, s].mean / timings[a, s].mean for s in shared)
    return RatioTable(tuple(modes), ratios)


def run_bench(plan: BenchPlan, progress: Callable[[str], None] | None = None) -> BenchResult:
    rng = np.random.default_rng(plan.seed)
    collected: dict[tuple[str, Size], list[float]] = {}
    for size in plan.sizes():
        cases = {}
        for mode in plan.modes:
            if not plan.runs(mode, size):
                continue
            call, check = make_case(mode, rng, size)
            if not check(call()):
                raise OracleCheckFailed(f"{mode} at H,W,D={size} disagrees with its oracle")
            call()  # warm-up
            cases[mode] = call
            collected[mode, size] = []
        for _ in range(plan.outer_repeats):
            for mode, call in cases.items():
                collected[mode, size].append(_median_time(call, plan.inner_repeats))
        if progress is not None:
            progress(f"H,W,D={size}: " + ", ".join(
                f"{m} {1e3 * statistics.fmean(collected[m, size]):.3f} ms" for m in cases))
    timings = {key: Timing(tuple(v)) for key, v in collected.items()}
    return BenchResult(ratio_table(plan.modes, timings), timings)


# -- reports ----------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(x, "#.3g").rstrip(".")


def emit_report(table: RatioTable, fmt: str = "csv") -> str:
    """CSV or Markdown text for ``table``; rows are B, columns A."""
    if fmt == "csv":
        lines = [",".join(("mode",) + table.modes)]
        for b, row in zip(table.modes, table.ratios):
            lines.append(",".join([b] + [_fmt(x) for x in row]))
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        names = [m.upper() for m in table.modes]
        lines = ["| B \\ A | " + " | ".join(names) + " |",
                 "|---" * (len(names) + 1) + "|"]
        for name, row in zip(names, table.ratios):
            lines.append(f"| {name} | " + " | ".join(_fmt(x) for x in row) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def parse_markdown(text: str) -> RatioTable:
    """Inverse of ``emit_report(..., "markdown")`` up to the printed precision."""
    rows = [line.strip().strip("|").split("|") for line in text.strip().splitlines()]
    header, body = rows[0], rows[2:]
    modes = tuple(cell.strip().lower() for cell in header[1:])
    ratios = np.array([[float(cell) for cell in row[1:]] for row in body])
    if [row[0].strip().lower() for row in body] != list(modes) or ratios.shape != (len(modes),) * 2:
        raise ValueError("malformed ratio table")
    return RatioTable(modes, ratios)


def published_comparison(table: RatioTable) -> str:
    """Side-by-side lines of measured and published ratios against F32."""
    if "f32" not in table.modes:
        return ""
    lines = ["ratio vs f32 (T_f32 / T_mode): measured, published on Cortex-A73"]
    for mode in table.modes:
        published = PUBLISHED_RATIOS["f32"][ALL_MODES.index(mode)]
        lines.append(f"  {mode}: {_fmt(table.entry('f32', mode))}, {_fmt(published)}")
    return "\n".join(lines) + "\n"


# -- command line ---------------------------------------------------------------------


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _mode_list(text: str) -> tuple[str, ...]:
    return tuple(x.strip().lower() for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bench", description="Time low-bit and baseline GeMM and report efficiency ratios.")
    p.add_argument("--modes", type=_mode_list, default=ALL_MODES, help="comma-separated subset of " + ",".join(ALL_MODES))
    p.add_argument("--heights", type=_int_list, default=DEFAULT_HEIGHTS)
    p.add_argument("--widths", type=_int_list, default=DEFAULT_WIDTHS)
    p.add_argument("--depths", type=_int_list, default=DEFAULT_DEPTHS)
    p.add_argument("--inner", type=int, default=5, help="timings per median (default 5)")
    p.add_argument("--outer", type=int, default=50, help="medians averaged (default 50)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--quiet", action="store_true", help="no progress or comparison output on stderr")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    log = None if args.quiet else (lambda msg: print(msg, file=sys.stderr))
    try:
        plan = BenchPlan(args.modes, args.heights, args.widths, args.depths,
                         args.inner, args.outer, args.seed)
        result = run_bench(plan, progress=log)
    except InvalidPlan as exc:
        print(f"bench: invalid plan: {exc}", file=sys.stderr)
        return 2
    except OracleCheckFailed as exc:
        print(f"bench: oracle check failed: {exc}", file=sys.stderr)
        return 3

    report = emit_report(result.table, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report)
    else:
        sys.stdout.write(report)
    if log is not None:
        for (mode, size), t in sorted(result.timings.items()):
            log(f"{mode} H,W,D={size}: {1e3 * t.mean:.4f} ms +/- {1e3 * t.stderr:.4f}")
        comparison = published_comparison(result.table)
        if comparison:
            log(comparison.rstrip("\n"))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
