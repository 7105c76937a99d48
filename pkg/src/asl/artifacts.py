"""Atomic CSV output with a config-hash header."""
from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence


def atomic_write_text(path: Path, text: str) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence], config_hash: str,
             comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash}\n")
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence], config_hash: str,
              comments: Sequence[str] = ()) -> Path:
    return atomic_write_text(path, csv_text(header, rows, config_hash, comments))


def write_csv_body(path: Path, body: str, config_hash: str, comments: Sequence[str] = ()) -> Path:
    """Prefix an already formatted CSV body with the header comments."""
    head = f"# config_hash={config_hash}\n" + "".join(f"# {c}\n" for c in comments)
    return atomic_write_text(path, head + body)


def read_csv(path: Path) -> tuple[list[str], list[list[str]], dict[str, str]]:
    """Header, rows and ``key=value`` comment metadata."""
    meta: dict[str, str] = {}
    lines = []
    for ln in Path(path).read_text().splitlines():
        if ln.startswith("#"):
            body = ln[1:].strip()
            if "=" in body:
                k, _, v = body.partition("=")
                meta[k.strip()] = v.strip()
        elif ln:
            lines.append(ln)
    reader = csv.reader(lines)
    header = next(reader)
    return header, list(reader), meta
