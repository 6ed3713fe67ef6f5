"""Result rows and their CSV / JSON-lines serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

COLUMNS = ("ns", "nk", "np", "omega", "t", "eps", "g", "lambda", "method", "overlaps", "k",
           "retained_rank", "dk", "n_qubits", "energy", "reference_energy", "relative_error",
           "wall_time_seconds", "seed")


@dataclass(frozen=True)
class ResultRow:
    ns: int
    nk: int
    np: int
    omega: float
    t: float
    eps: float
    g: float
    lam: float
    method: str
    overlaps: bool
    k: int | None
    retained_rank: int | None
    dk: int | None
    n_qubits: int | None
    energy: float | None
    reference_energy: float | None = None
    relative_error: float | None = None
    wall_time_seconds: float = 0.0
    seed: int = 0
    error: str | None = None  # jsonl only

    def __post_init__(self) -> None:
        if (self.reference_energy is None) != (self.relative_error is None):
            raise ValueError("relative_error must be present exactly when reference_energy is")

    def with_reference(self, reference: float | None) -> "ResultRow":
        if reference is None or self.energy is None:
            return self
        rel = abs(self.energy - reference) / abs(reference)
        return _replace(self, reference_energy=float(reference), relative_error=rel)

    def key(self) -> tuple:
        """Identity of the grid point, used to skip completed rows on resume."""
        return (self.ns, self.nk, self.np, _fmt(self.omega), _fmt(self.t), _fmt(self.eps),
                _fmt(self.g), self.method, self.overlaps, self.seed)

    def as_record(self) -> dict:
        record = {("lambda" if f.name == "lam" else f.name): getattr(self, f.name)
                  for f in fields(self)}
        return record


def _replace(row: ResultRow, **changes) -> ResultRow:
    data = asdict(row)
    data.update(changes)
    return ResultRow(**data)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


_INT = {"ns", "nk", "np", "k", "retained_rank", "dk", "n_qubits", "seed"}
_FLOAT = {"omega", "t", "eps", "g", "lambda", "energy", "reference_energy", "relative_error",
          "wall_time_seconds"}


def _parse(column: str, text: str):
    if text == "":
        return None
    if column in _INT:
        return int(text)
    if column in _FLOAT:
        return float(text)
    if column == "overlaps":
        return text == "true"
    return text


def _from_record(record: dict) -> ResultRow:
    data = {("lam" if k == "lambda" else k): v for k, v in record.items()}
    for name in ("omega", "t", "eps", "g", "lam", "energy", "reference_energy",
                 "relative_error", "wall_time_seconds"):
        if data.get(name) is not None:
            data[name] = float(data[name])
    if data.get("wall_time_seconds") is None:
        data["wall_time_seconds"] = 0.0
    return ResultRow(**data)


def format_csv_row(row: ResultRow) -> str:
    record = row.as_record()
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow([_fmt(record[c]) for c in COLUMNS])
    return buf.getvalue()


def csv_header() -> str:
    return ",".join(COLUMNS) + "\n"


def format_jsonl_row(row: ResultRow) -> str:
    record = row.as_record()
    clean = {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
             for k, v in record.items()}
    return json.dumps(clean) + "\n"


def format_row(row: ResultRow, fmt: str) -> str:
    return format_csv_row(row) if fmt == "csv" else format_jsonl_row(row)


def parse_csv(text: str) -> list[ResultRow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is not None and tuple(reader.fieldnames) != COLUMNS:
        raise ValueError(f"unexpected CSV columns {reader.fieldnames}")
    return [_from_record({c: _parse(c, r[c]) for c in COLUMNS}) for r in reader]


def parse_jsonl(text: str) -> list[ResultRow]:
    return [_from_record(json.loads(line)) for line in text.splitlines() if line.strip()]


def read_rows(path: str | Path, fmt: str) -> list[ResultRow]:
    text = Path(path).read_text()
    return parse_csv(text) if fmt == "csv" else parse_jsonl(text)


def load_reference_table(path: str | Path) -> list[tuple[float, float]]:
    """Two whitespace- or comma-separated columns ``lambda energy``; ``#`` starts a comment."""
    table = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected two columns, got {line!r}")
        try:
            table.append((float(parts[0]), float(parts[1])))
        except ValueError:
            if not table and lineno == 1:
                continue  # header line
            raise ValueError(f"{path}:{lineno}: non-numeric entry {line!r}") from None
    return table


def lookup_reference(table: list[tuple[float, float]], lam: float,
                     rtol: float = 1e-9) -> float | None:
    for lam_ref, energy in table:
        if math.isclose(lam_ref, lam, rel_tol=rtol, abs_tol=1e-12):
            return energy
    return None
