"""Result tables: one row per run, CSV or markdown, 2-decimal half-up."""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .errors import EmptyInput, FormatError

MODEL_DISPLAY = {
    "pomsgcn": "PO-MS-GCN",
    "transformer": "Transformer",
    "fusion": "Feature Fusion",
}


@dataclass(frozen=True)
class RunRecord:
    dataset: str
    model: str
    accuracy_pct: float
    f1_at_50_pct: float


def _round2(x: float) -> str:
    return str(Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def load_run_record(run_dir) -> RunRecord:
    run_dir = Path(run_dir)
    record_path = run_dir / "run_record.json"
    if not record_path.exists():
        raise FormatError(f"missing {record_path}")
    doc = json.loads(record_path.read_text(encoding="utf-8"))
    metrics = doc.get("metrics")
    if metrics is None:
        raise FormatError(f"{record_path}: run did not complete, no metrics")
    f1 = metrics["f1_pct"].get("0.50")
    if f1 is None:
        # fall back to the first reported threshold
        f1 = next(iter(metrics["f1_pct"].values()))
    return RunRecord(
        dataset=doc.get("dataset", "synth"),
        model=doc.get("model", "unknown"),
        accuracy_pct=float(metrics["accuracy_pct"]),
        f1_at_50_pct=float(f1),
    )


def emit_report(records: list[RunRecord], fmt: str = "csv") -> str:
    if not records:
        raise EmptyInput("no run records to report")
    records = sorted(records, key=lambda r: (r.dataset, r.model))
    if fmt == "csv":
        lines = ["dataset,model,accuracy_pct,f1_at_50_pct"]
        for r in records:
            lines.append(
                f"{r.dataset},{r.model},{_round2(r.accuracy_pct)},{_round2(r.f1_at_50_pct)}"
            )
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        models = sorted({r.model for r in records})
        headers = ["Dataset"]
        for m in models:
            name = MODEL_DISPLAY.get(m, m)
            headers += [f"{name} Accuracy%", f"{name} F1@50%"]
        lines = [
            "| " + " | ".join(headers) + " |",
            "|" + "|".join("---" for _ in headers) + "|",
        ]
        by_key = {(r.dataset, r.model): r for r in records}
        for ds in sorted({r.dataset for r in records}):
            cells = [ds]
            for m in models:
                r = by_key.get((ds, m))
                if r is None:
                    cells += ["-", "-"]
                else:
                    cells += [_round2(r.accuracy_pct), _round2(r.f1_at_50_pct)]
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
    raise FormatError(f"unknown report format {fmt!r}")
