"""Report documents: JSON and CSV writers, optional SVG plots."""

from __future__ import annotations

import csv
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .modulus import _jsonable

VERDICTS = ("pass", "fail", "inconclusive")


@dataclass
class ReportDocument:
    """Version, config echo, payloads and per-stage wall clock.

    Timings live in their own field so ``numeric()`` is identical across
    reruns with the same config and seed.
    """

    version: str
    config: dict
    payloads: list[dict] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def add(self, kind: str, payload: Any) -> dict:
        body = payload.to_dict() if hasattr(payload, "to_dict") else payload
        entry = {"kind": kind, **_jsonable(body)}
        self.payloads.append(entry)
        return entry

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def verdicts(self) -> list[str]:
        out = []
        for p in self.payloads:
            v = p.get("verdict")
            if v in VERDICTS:
                out.append(v)
        return out

    @property
    def verdict(self) -> str:
        vs = self.verdicts()
        if "fail" in vs:
            return "fail"
        if "inconclusive" in vs or not vs:
            return "inconclusive"
        return "pass"

    def numeric(self) -> dict:
        return {"version": self.version, "config": _jsonable(self.config),
                "verdict": self.verdict, "payloads": self.payloads}

    def to_dict(self) -> dict:
        return {**self.numeric(), "timings": _jsonable(self.timings)}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, path: str | Path) -> None:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(self.dumps() + "\n")


def write_csv(rows: Iterable[dict], path: str | Path, columns: list[str] | None = None) -> None:
    rows = list(rows)
    if columns is None:
        columns = []
        for r in rows:
            columns += [k for k in r if k not in columns]
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in columns})


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return "" if x is None else x


def write_svg(path: str | Path, series: list[tuple[str, list, list]], xlabel: str, ylabel: str,
              title: str = "", logx: bool = True, logy: bool = True, hline: float | None = None) -> None:
    """Line plot of (label, x, y) series.  Needs matplotlib; a deterministic SVG is written."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "lpcarleman"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, x, y in series:
        ax.plot(x, y, marker="o", ms=3, label=label)
    if hline is not None:
        ax.axhline(hline, color="grey", ls="--", lw=0.8)
    if logx:
        ax.set_xscale("log", base=2)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(p, format="svg", metadata={"Date": None})
    plt.close(fig)
