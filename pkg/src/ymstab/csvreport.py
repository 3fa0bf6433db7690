"""Self-describing CSV output: ``# key: value`` metadata, a header, data rows."""
import csv
import io
import math
from dataclasses import dataclass, field

__all__ = ["CsvReport", "format_value", "parse"]

SIGNIFICANT_DIGITS = 12


def format_value(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            raise ValueError("NaN is not allowed in reports")
        return f"{v + 0.0:.{SIGNIFICANT_DIGITS}g}"  # + 0.0 folds -0.0 into 0.0
    return str(v)


def _parse_value(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


@dataclass
class CsvReport:
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(tuple(values))

    def body(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_value(v) for v in row])
        return buf.getvalue()

    def emit(self, meta=True):
        head = "".join(f"# {k}: {v}\n" for k, v in self.metadata.items()) if meta else ""
        return head + self.body()

    def column(self, name):
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def write(self, path, meta=True):
        text = self.emit(meta)
        if path in (None, "-"):
            print(text, end="")
        else:
            with open(path, "w", newline="") as fh:
                fh.write(text)


def parse(text):
    """Inverse of ``CsvReport.emit`` (numbers come back at printed precision)."""
    metadata = {}
    lines = text.splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            metadata[key.strip()] = value.strip()
        elif line:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = []
    for rec in reader:
        if len(rec) != len(columns):
            raise ValueError("ragged CSV row")
        rows.append(tuple(_parse_value(v) for v in rec))
    return CsvReport(columns, rows, metadata)
