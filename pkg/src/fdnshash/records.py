"""Text file formats for hashes and template databases.

Both formats are line-oriented ``key = value`` text. Floats are written with
17 significant digits, which round-trips every float64 exactly. A loaded
record recomputes the parameter fingerprint and refuses to load if it does
not match the stored one.

Hash record::

    algorithm = f-dns
    kind = hash
    version = 0.1.0
    fingerprint = 3f0c...
    [params]
    canonical_w = 256
    ...
    [values]
    0.0
    12.345678901234567
    ...

A template database has the same header (with ``kind = templates``) followed by one ``[template]``
section per entry holding ``label``, ``source`` and ``values`` (64 numbers
separated by spaces).
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path

from . import __version__
from .errors import FdnsError
from .evaluation import TemplateDb
from .fdns import ALGORITHM, HASH_LENGTH, FdnsParams, HashVector


class RecordFormatError(FdnsError, ValueError):
    """A hash or template file is malformed or its fingerprint does not verify."""


_INT_FIELDS = {"canonical_w", "canonical_h", "gaussian_kernel", "search_window", "neighborhood_window"}


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _header(params: FdnsParams, kind: str) -> list:
    lines = [f"algorithm = {ALGORITHM}", f"kind = {kind}", f"version = {__version__}", f"fingerprint = {params.fingerprint}", "[params]"]
    for f in fields(FdnsParams):
        value = getattr(params, f.name)
        lines.append(f"{f.name} = {format_float(value) if isinstance(value, float) else value}")
    return lines


def _sections(text: str) -> list:
    """Split into ``(section_name, [(key, value) or (None, line)])`` blocks."""
    blocks = [("", [])]
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            blocks.append((line[1:-1].strip(), []))
        elif "=" in line:
            key, _, value = line.partition("=")
            blocks[-1][1].append((key.strip(), value.strip()))
        else:
            blocks[-1][1].append((None, line))
    return blocks


def _parse_params(header: dict, block: list, expected_kind: str) -> FdnsParams:
    if header.get("algorithm") != ALGORITHM:
        raise RecordFormatError(f"not an {ALGORITHM} record (algorithm={header.get('algorithm')!r})")
    if header.get("kind") != expected_kind:
        raise RecordFormatError(f"expected a {expected_kind} file, found kind={header.get('kind')!r}")
    values = {k: v for k, v in block if k is not None}
    kwargs = {}
    for f in fields(FdnsParams):
        if f.name not in values:
            raise RecordFormatError(f"params block lacks {f.name!r}")
        try:
            kwargs[f.name] = int(values[f.name]) if f.name in _INT_FIELDS else float(values[f.name])
        except ValueError:
            raise RecordFormatError(f"bad value for {f.name!r}: {values[f.name]!r}") from None
    try:
        params = FdnsParams(**kwargs)
    except ValueError as exc:
        raise RecordFormatError(f"invalid params block: {exc}") from None
    if header.get("fingerprint") != params.fingerprint:
        raise RecordFormatError(
            f"stored fingerprint {header.get('fingerprint')!r} does not match params ({params.fingerprint})"
        )
    return params


def _floats(tokens) -> list:
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise RecordFormatError(f"bad number in values: {exc}") from None


def dumps_hash(h: HashVector, params: FdnsParams) -> str:
    if h.params_fingerprint != params.fingerprint:
        raise RecordFormatError("hash fingerprint does not match the params being written")
    lines = _header(params, "hash") + ["[values]"] + [format_float(v) for v in h.values]
    return "\n".join(lines) + "\n"


def loads_hash(text: str):
    """Parse a hash record; returns ``(HashVector, FdnsParams)``."""
    blocks = dict((name, body) for name, body in _sections(text))
    header = {k: v for k, v in blocks.get("", []) if k is not None}
    params = _parse_params(header, blocks.get("params", []), "hash")
    values = _floats(line for k, line in blocks.get("values", []) if k is None)
    if len(values) != HASH_LENGTH:
        raise RecordFormatError(f"expected {HASH_LENGTH} values, found {len(values)}")
    return HashVector(values, params.fingerprint), params


def write_hash(path, h: HashVector, params: FdnsParams) -> None:
    Path(path).write_text(dumps_hash(h, params), encoding="utf-8", newline="\n")


def read_hash(path):
    return loads_hash(Path(path).read_text(encoding="utf-8"))


def _check_field(name: str, value: str) -> str:
    if "\n" in value or "\r" in value or value != value.strip():
        raise RecordFormatError(f"{name} {value!r} cannot be stored (newline or surrounding blanks)")
    return value


def dumps_templates(db: TemplateDb) -> str:
    if db.params is None or db.params.fingerprint != db.params_fingerprint:
        raise RecordFormatError("template database needs the FdnsParams its hashes were made with")
    lines = _header(db.params, "templates")
    for e in db.entries:
        lines += [
            "[template]",
            f"label = {_check_field('label', e.label)}",
            f"source = {_check_field('source', e.source)}",
            "values = " + " ".join(format_float(v) for v in e.hash.values),
        ]
    return "\n".join(lines) + "\n"


def loads_templates(text: str) -> TemplateDb:
    blocks = _sections(text)
    header = {k: v for k, v in blocks[0][1] if k is not None}
    params_block = next((body for name, body in blocks if name == "params"), [])
    params = _parse_params(header, params_block, "templates")
    db = TemplateDb(params.fingerprint, params=params)
    for name, body in blocks:
        if name != "template":
            continue
        entry = {k: v for k, v in body if k is not None}
        missing = {"label", "source", "values"} - entry.keys()
        if missing:
            raise RecordFormatError(f"template entry lacks {sorted(missing)}")
        values = _floats(entry["values"].split())
        if len(values) != HASH_LENGTH:
            raise RecordFormatError(f"template {entry['source']!r} has {len(values)} values")
        db.add(entry["label"], entry["source"], HashVector(values, params.fingerprint))
    return db


def write_templates(path, db: TemplateDb) -> None:
    Path(path).write_text(dumps_templates(db), encoding="utf-8", newline="\n")


def read_templates(path) -> TemplateDb:
    return loads_templates(Path(path).read_text(encoding="utf-8"))
