"""CSV reading/writing helpers: strict headers, line-numbered rows, atomic output."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence, Union

from .errors import BadHeader

Source = Union[str, os.PathLike, bytes, IO[str], IO[bytes]]


def format_float(value: float) -> str:
    """17 significant digits, enough for an exact float64 round-trip."""
    return format(float(value), ".17g")


def _text_stream(source: Source) -> tuple[IO[str], bool, str | None]:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8-sig"), newline=""), True, None
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        return open(path, "r", encoding="utf-8-sig", newline=""), True, str(path)
    if isinstance(source, io.TextIOBase):
        return source, False, getattr(source, "name", None)
    # binary file-like
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    return io.StringIO(data, newline=""), True, getattr(source, "name", None)


def read_rows(source: Source, header: Sequence[str]) -> Iterator[tuple[int, list[str], str | None]]:
    """Yield ``(line_number, fields, source_name)`` for every data row.

    The header must match ``header`` exactly. Blank lines are skipped. An empty
    input (no header at all) yields nothing.
    """
    stream, owned, name = _text_stream(source)
    try:
        reader = csv.reader(stream)
        first = next(reader, None)
        if first is None:
            return
        if [h.strip() for h in first] != list(header):
            raise BadHeader(reader.line_num, f"expected header {','.join(header)!r}, got {','.join(first)!r}", name)
        for row in reader:
            if not row or (len(row) == 1 and row[0].strip() == ""):
                continue
            yield reader.line_num, row, name
    finally:
        if owned:
            stream.close()


def write_csv(path: Union[str, os.PathLike], header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    """Write a UTF-8 RFC-4180 CSV atomically (temp file in the same directory, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(header)
            writer.writerows(rows)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_csv(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()
