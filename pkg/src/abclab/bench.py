"""Benchmark harness: timed, memory-sampled issuance/verification runs.

Reproduces the evaluation grid (schemes x attribute counts x repeated runs)
and aggregates each cell into min/max/mean plus the share of runs at or
above the mean.  Memory is the OS resident set size of this process,
sampled by a background observer thread and reported in MB rounded to two
decimal places.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import random
import statistics
import threading
import time
from dataclasses import asdict, dataclass

from . import scheme, wire

log = logging.getLogger(__name__)

PHASES = ("issue", "verify")
TIME_METRIC = "time_ms"
MEMORY_METRIC = "memory_mb"
RATIO_SCHEME_LABEL = "modexp1024/ecc160"

# Consecutive failures after which a grid cell is abandoned.
_CELL_FAILURE_LIMIT = 3


class UnsupportedPlatform(RuntimeError):
    """The OS exposes no resident-set-size reading."""


class EmptyCell(ValueError):
    """summarize() was handed no records."""


class IoFailure(OSError):
    """A report file could not be written."""


@dataclass(frozen=True)
class BenchConfig:
    schemes: tuple[str, ...] = scheme.SCHEME_NAMES
    attr_counts: tuple[int, ...] = (1, 5, 10)
    runs: int = 100
    mode: str = "in-process"
    memory_sample_interval_ms: float = 10.0
    seed: int | None = None
    out: str | None = None
    issuer_addr: tuple[str, int] | None = None
    verifier_addr: tuple[str, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "attr_counts", tuple(self.attr_counts))
        unknown = set(self.schemes) - set(scheme.SCHEME_NAMES)
        if unknown or not self.schemes:
            raise ValueError(f"schemes must be a non-empty subset of {scheme.SCHEME_NAMES}")
        if not self.attr_counts or any(not 1 <= c <= 10 for c in self.attr_counts):
            raise ValueError("attr_counts must be a non-empty subset of 1..10")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.mode not in ("in-process", "over-wire"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.memory_sample_interval_ms < 1.0:
            raise ValueError("memory_sample_interval_ms must be >= 1")
        if self.mode == "over-wire" and not (self.issuer_addr and self.verifier_addr):
            raise ValueError("over-wire mode needs issuer_addr and verifier_addr")

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchConfig":
        kwargs = dict(doc)
        for key in ("issuer_addr", "verifier_addr"):
            if isinstance(kwargs.get(key), str):
                kwargs[key] = wire.parse_endpoint(kwargs[key])
            elif isinstance(kwargs.get(key), list):
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass
class BenchRecord:
    scheme: str
    phase: str
    attr_count: int
    run_index: int
    elapsed_ms: float
    rss_mb_samples: list[float]
    cred_sha256: str
    valid: bool | None = None


@dataclass
class StatsSummary:
    scheme: str
    phase: str
    attr_count: int
    metric: str
    min: float
    max: float
    mean: float
    pct_ge_mean: float


def rss_mb() -> float:
    """Current resident set size in MB, rounded to two decimals."""
    try:
        import psutil

        raw = psutil.Process().memory_info().rss
    except Exception as exc:
        raise UnsupportedPlatform(f"no RSS reading available: {exc}") from exc
    return round(raw / 2**20, 2)


def time_phase(action):
    """Run action under the monotonic clock; returns (result, elapsed_ms)."""
    start = time.perf_counter()
    result = action()
    return result, (time.perf_counter() - start) * 1e3


def sample_memory(interval_ms: float, stop_event: threading.Event):
    """Yield (monotonic_time, rss_mb) readings until stop_event is set."""
    if interval_ms < 1.0:
        raise ValueError("interval must be >= 1 ms")
    while not stop_event.is_set():
        yield time.perf_counter(), rss_mb()
        stop_event.wait(interval_ms / 1e3)


class MemorySampler:
    """Background observer appending (time, rss_mb) to a sample log.

    Reading the log while the thread appends is safe: list.append is atomic
    and entries are only ever appended.
    """

    def __init__(self, interval_ms: float = 10.0):
        self.interval_ms = interval_ms
        self.samples: list[tuple[float, float]] = []
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        for entry in sample_memory(self.interval_ms, self._stop):
            self.samples.append(entry)

    def __enter__(self):
        rss_mb()  # fail fast on platforms with no RSS facility
        self._thread.start()
        return self

    def __exit__(self, *exc_info):
        self._stop.set()
        self._thread.join(timeout=2.0)

    def window(self, start: float, end: float) -> list[float]:
        """Samples that landed in [start, end); one direct reading if none did."""
        values = [mb for (t, mb) in list(self.samples) if start <= t < end]
        return values or [rss_mb()]


def _fingerprint(wire_doc: dict) -> str:
    return hashlib.sha256(
        json.dumps(wire_doc, sort_keys=True).encode("utf-8")
    ).hexdigest()


def run_benchmark(config: BenchConfig) -> list[BenchRecord]:
    """Execute the full grid and return two records (issue, verify) per run.

    In-process mode regenerates the issuer key for every run, so only the
    system parameters and the attribute values stay fixed across runs.
    Over-wire mode talks to long-lived services, whose keys were fixed at
    service start; elapsed times are then client-side round trips.
    """
    rng = random.Random(config.seed) if config.seed is not None else random.SystemRandom()
    records: list[BenchRecord] = []
    with MemorySampler(config.memory_sample_interval_ms) as sampler:
        for scheme_name in config.schemes:
            for attr_count in config.attr_counts:
                attrs = scheme.DEFAULT_ATTRIBUTES[:attr_count]
                failures = 0
                for run_index in range(config.runs):
                    try:
                        result = _one_run(config, scheme_name, attrs, rng)
                    except wire.WireError as exc:
                        failures += 1
                        log.warning(
                            "run failed (%s, %d attrs, run %d): %s",
                            scheme_name, attr_count, run_index, exc,
                        )
                        if failures >= _CELL_FAILURE_LIMIT:
                            log.error(
                                "aborting cell (%s, %d attrs) after %d consecutive "
                                "failures; results for this cell are partial",
                                scheme_name, attr_count, failures,
                            )
                            break
                        continue
                    failures = 0
                    (issue_ms, issue_span), (valid, verify_ms, verify_span), digest = result
                    records.append(BenchRecord(
                        scheme_name, "issue", attr_count, run_index,
                        issue_ms, sampler.window(*issue_span), digest,
                    ))
                    records.append(BenchRecord(
                        scheme_name, "verify", attr_count, run_index,
                        verify_ms, sampler.window(*verify_span), digest, valid,
                    ))
    return records


def _one_run(config, scheme_name, attrs, rng):
    if config.mode == "in-process":
        key = scheme.keygen(scheme_name, rng)
        public = scheme.public_part(scheme_name, key)
        t0 = time.perf_counter()
        cred, issue_ms = time_phase(lambda: scheme.issue(scheme_name, key, attrs, rng))
        t1 = time.perf_counter()
        valid, verify_ms = time_phase(lambda: scheme.verify(scheme_name, public, cred))
        t2 = time.perf_counter()
        digest = _fingerprint(wire.credential_to_wire(scheme_name, cred))
    else:
        t0 = time.perf_counter()
        doc, issue_ms = wire.client_issue(config.issuer_addr, scheme_name, attrs)
        t1 = time.perf_counter()
        valid, verify_ms = wire.client_verify(config.verifier_addr, scheme_name, doc)
        t2 = time.perf_counter()
        digest = _fingerprint(doc)
    return (issue_ms, (t0, t1)), (valid, verify_ms, (t1, t2)), digest


def summarize(records: list[BenchRecord]) -> list[StatsSummary]:
    """Per-cell stats: time over elapsed_ms, memory over per-run max RSS."""
    if not records:
        raise EmptyCell("no records to summarize")
    cells: dict[tuple, list[BenchRecord]] = {}
    for rec in records:
        cells.setdefault((rec.scheme, rec.phase, rec.attr_count), []).append(rec)

    summaries = []
    for metric in (TIME_METRIC, MEMORY_METRIC):
        for (scheme_name, phase, attr_count), recs in cells.items():
            if metric == TIME_METRIC:
                values = [r.elapsed_ms for r in recs]
            else:
                values = [max(r.rss_mb_samples) for r in recs]
            mean = statistics.fmean(values)
            pct = 100.0 * sum(1 for v in values if v >= mean) / len(values)
            if metric == MEMORY_METRIC:
                mean = round(mean, 2)
            summaries.append(StatsSummary(
                scheme_name, phase, attr_count, metric,
                min(values), max(values), mean, pct,
            ))
    return summaries


def mean_ratio_rows(summaries: list[StatsSummary]) -> list[dict]:
    """modexp1024/ecc160 mean-time ratios per (phase, attr_count) cell."""
    means: dict[tuple, float] = {}
    for s in summaries:
        if s.metric == TIME_METRIC:
            means[(s.scheme, s.phase, s.attr_count)] = s.mean
    rows = []
    for (scheme_name, phase, attr_count), slow_mean in sorted(means.items()):
        if scheme_name != "modexp1024":
            continue
        fast_mean = means.get(("ecc160", phase, attr_count))
        if fast_mean:
            rows.append({
                "phase": phase,
                "attr_count": attr_count,
                "metric": TIME_METRIC,
                "ratio": slow_mean / fast_mean,
            })
    return rows


CSV_COLUMNS = ("scheme", "phase", "attr_count", "metric", "min", "max", "mean", "pct_ge_mean")


def _render_csv(summaries, ratios, stream):
    writer = csv.writer(stream)
    writer.writerow(CSV_COLUMNS)
    for s in summaries:
        writer.writerow([s.scheme, s.phase, s.attr_count, s.metric,
                         s.min, s.max, s.mean, s.pct_ge_mean])
    for row in ratios:
        writer.writerow([RATIO_SCHEME_LABEL, row["phase"], row["attr_count"],
                         f"{row['metric']}_mean_ratio", "", "", row["ratio"], ""])


def _render_markdown(summaries, ratios, stream):
    titles = {
        ("issue", TIME_METRIC): "Issuance time (ms)",
        ("verify", TIME_METRIC): "Verification time (ms)",
        ("issue", MEMORY_METRIC): "Issuance memory (MB, per-run max RSS)",
        ("verify", MEMORY_METRIC): "Verification memory (MB, per-run max RSS)",
    }
    stream.write("# Credential scheme benchmark\n")
    for (phase, metric), title in titles.items():
        rows = [s for s in summaries if s.phase == phase and s.metric == metric]
        if not rows:
            continue
        stream.write(f"\n## {title}\n\n")
        stream.write("| scheme | attrs | min | max | mean | % runs >= mean |\n")
        stream.write("| --- | --- | --- | --- | --- | --- |\n")
        for s in sorted(rows, key=lambda s: (s.scheme, s.attr_count)):
            stream.write(
                f"| {s.scheme} | {s.attr_count} | {s.min:.2f} | {s.max:.2f} "
                f"| {s.mean:.2f} | {s.pct_ge_mean:.2f} |\n"
            )
    if ratios:
        stream.write("\n## Mean-time ratios (modexp1024 / ecc160)\n\n")
        stream.write("| phase | attrs | ratio |\n| --- | --- | --- |\n")
        for row in ratios:
            stream.write(f"| {row['phase']} | {row['attr_count']} | {row['ratio']:.2f} |\n")


def _render_json(summaries, ratios, stream):
    json.dump({"summaries": [asdict(s) for s in summaries], "ratios": ratios},
              stream, indent=2)
    stream.write("\n")


_RENDERERS = {"csv": _render_csv, "markdown": _render_markdown, "json": _render_json}

REPORT_FORMATS = tuple(_RENDERERS)


def emit_report(summaries, fmt: str, path) -> None:
    if fmt not in _RENDERERS:
        raise ValueError(f"format must be one of {REPORT_FORMATS}, got {fmt!r}")
    if not summaries:
        raise EmptyCell("nothing to report")
    ratios = mean_ratio_rows(summaries)
    try:
        with open(path, "w", encoding="utf-8", newline="") as stream:
            _RENDERERS[fmt](summaries, ratios, stream)
    except OSError as exc:
        raise IoFailure(f"cannot write report to {path}: {exc}") from exc


def summaries_from_json(doc: dict) -> list[StatsSummary]:
    return [StatsSummary(**entry) for entry in doc["summaries"]]


def save_records(path, config: BenchConfig, records: list[BenchRecord]) -> None:
    doc = {"config": asdict(config), "records": [asdict(r) for r in records]}
    try:
        with open(path, "w", encoding="utf-8") as stream:
            json.dump(doc, stream)
            stream.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write records to {path}: {exc}") from exc


def load_records(path) -> list[BenchRecord]:
    with open(path, encoding="utf-8") as stream:
        doc = json.load(stream)
    return [BenchRecord(**entry) for entry in doc["records"]]
