"""Report rows, CSV/JSON artifacts and SVG plots."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

CSV_COLUMNS = ("suite", "check", "constant", "witness", "J", "seed", "status")
PASS, FAIL, INFO = "PASS", "FAIL", "INFO"


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


@dataclass
class ReportRow:
    """One measured constant with the cube or trial attaining it.

    ``J`` lists the resolutions that went into the value ("8" or "6|8|10").
    ``wall_time`` is kept out of the CSV so that reruns stay byte-identical.
    """

    suite: str
    check: str
    constant: float
    witness: str = ""
    J: str = ""
    seed: int = 0
    status: str = INFO
    wall_time: float = field(default=0.0, compare=False)

    def as_csv(self) -> list[str]:
        return [self.suite, self.check, _fmt(float(self.constant)), self.witness, self.J, str(self.seed), self.status]


def js(Js) -> str:
    return "|".join(str(j) for j in Js)


def status(ok: bool) -> str:
    return PASS if ok else FAIL


@dataclass
class Report:
    suite: str
    seed: int
    rows: list = field(default_factory=list)
    _clock: float = field(default_factory=time.perf_counter, repr=False)

    def add(self, check: str, constant: float, witness="", J="", status_=INFO) -> ReportRow:
        """Append a row; its wall time is the time elapsed since the previous row."""
        now = time.perf_counter()
        row = ReportRow(self.suite, check, float(constant), str(witness), str(J), self.seed, status_, now - self._clock)
        self._clock = now
        self.rows.append(row)
        return row

    def extend(self, other: "Report"):
        self.rows.extend(other.rows)

    @property
    def passed(self) -> bool:
        return all(r.status != FAIL for r in self.rows)

    @property
    def failed(self) -> list[ReportRow]:
        return [r for r in self.rows if r.status == FAIL]

    def summary(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "status": PASS if self.passed else FAIL,
            "rows": len(self.rows),
            "failed_checks": [r.check for r in self.failed],
        }


def csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.as_csv())
    return buf.getvalue()


def write_report(report: Report, out_dir: str | Path, stem: str | None = None) -> dict:
    """Write ``<stem>.csv``, ``<stem>.summary.json`` and ``<stem>.timing.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or report.suite.replace("/", "_")
    paths = {
        "csv": out / f"{stem}.csv",
        "summary": out / f"{stem}.summary.json",
        "timing": out / f"{stem}.timing.json",
    }
    paths["csv"].write_text(csv_text(report.rows))
    paths["summary"].write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    timing = {f"{r.check}@{r.J}": r.wall_time for r in report.rows}
    paths["timing"].write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n")
    return paths


def read_csv(path: str | Path) -> list[ReportRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected CSV header {reader.fieldnames}")
        return [
            ReportRow(r["suite"], r["check"], float(r["constant"]), r["witness"], r["J"], int(r["seed"]), r["status"])
            for r in reader
        ]


def merge_reports(paths) -> list[ReportRow]:
    rows = []
    for p in paths:
        rows.extend(read_csv(p))
    rows.sort(key=lambda r: (r.suite, r.check, r.J, r.seed))
    return rows


def _sweep_series(rows) -> dict:
    """Rows whose J field is a single resolution, grouped by (suite, check)."""
    series: dict[tuple, list] = {}
    for r in rows:
        if r.J.isdigit() and math.isfinite(r.constant):
            series.setdefault((r.suite, r.check), []).append((int(r.J), r.constant))
    return {k: sorted(v) for k, v in series.items() if len(v) >= 2}


def plot_sweeps(rows, out_dir: str | Path) -> list[Path]:
    """One SVG per suite: every check's constant against J on a log axis."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "varsparse"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    by_suite: dict[str, list] = {}
    for (suite, check), pts in _sweep_series(rows).items():
        by_suite.setdefault(suite, []).append((check, pts))
    written = []
    for suite, items in sorted(by_suite.items()):
        fig, ax = plt.subplots(figsize=(6, 4))
        for check, pts in sorted(items):
            J, c = zip(*pts)
            ax.plot(J, c, marker="o", label=check)
        ax.set_xlabel("J (resolution level)")
        ax.set_ylabel("fitted constant / ratio")
        if all(c > 0 for _, pts in items for _, c in pts):
            ax.set_yscale("log")
        ax.set_title(suite)
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out / f"{suite.replace('/', '_')}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
