"""Line-oriented text formats for graphs, lists, labellings, vectors and certificates."""

from __future__ import annotations

import hashlib
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .graph import MultiGraph
from .reduction import IterationRecord, ReductionCertificate, ReductionParams


class FormatError(ValueError):
    pass


def _lines(text: str) -> list[str]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def _read(path) -> str:
    return Path(path).read_text()


def _write(path, text: str):
    Path(path).write_text(text)


def digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


# graphs ---------------------------------------------------------------------


def format_edgelist(G: MultiGraph) -> str:
    rows = [f"{G.n} {G.m}"] + [f"{u} {v}" for u, v in G.edges]
    return "\n".join(rows) + "\n"


def parse_edgelist(text: str) -> MultiGraph:
    lines = _lines(text)
    if not lines:
        raise FormatError("empty edge list")
    try:
        n, m = (int(x) for x in lines[0].split())
        edges = [tuple(int(x) for x in line.split()) for line in lines[1:]]
    except ValueError as exc:
        raise FormatError(f"bad edge list: {exc}") from None
    if len(edges) != m or any(len(e) != 2 for e in edges):
        raise FormatError(f"header promises {m} edges, found {len(edges)}")
    try:
        return MultiGraph(n, edges)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def write_edgelist(G: MultiGraph, path):
    _write(path, format_edgelist(G))


def read_edgelist(path) -> MultiGraph:
    return parse_edgelist(_read(path))


# lists ----------------------------------------------------------------------


def format_lists(lists: Mapping[int, Iterable[int]]) -> str:
    return "".join(f"{v}: {' '.join(str(c) for c in sorted(cs))}\n" for v, cs in sorted(lists.items()))


def parse_lists(text: str) -> dict[int, list[int]]:
    out = {}
    for line in _lines(text):
        if ":" not in line:
            raise FormatError(f"list line without ':': {line!r}")
        key, rest = line.split(":", 1)
        try:
            out[int(key)] = sorted(int(c) for c in rest.split())
        except ValueError:
            raise FormatError(f"bad list line {line!r}") from None
    return out


def read_lists(path) -> dict[int, list[int]]:
    return parse_lists(_read(path))


def write_lists(lists, path):
    _write(path, format_lists(lists))


# labellings -----------------------------------------------------------------


def format_labelling(f: Mapping[int, int], *, span: int | None = None, valid: bool | None = None) -> str:
    rows = [f"{v} {c}" for v, c in sorted(f.items())]
    if span is not None or valid is not None:
        rows.append(f"span={span} valid={str(valid).lower()}")
    return "\n".join(rows) + "\n"


def parse_labelling(text: str) -> dict[int, int]:
    out = {}
    for line in _lines(text):
        if "=" in line:
            continue  # trailer
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"bad labelling line {line!r}")
        try:
            out[int(parts[0])] = int(parts[1])
        except ValueError:
            raise FormatError(f"bad labelling line {line!r}") from None
    return out


def read_labelling(path) -> dict[int, int]:
    return parse_labelling(_read(path))


def write_labelling(f, path, **trailer):
    _write(path, format_labelling(f, **trailer))


# edge vectors ---------------------------------------------------------------


def _number(token: str):
    if "/" in token:
        return Fraction(token)
    try:
        return int(token)
    except ValueError:
        return float(token)


def _show(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_vector(x) -> str:
    items = sorted(x.items()) if isinstance(x, Mapping) else enumerate(x)
    return "".join(f"{e}: {_show(v)}\n" for e, v in items)


def parse_vector(text: str, m: int | None = None) -> list:
    found = {}
    for line in _lines(text):
        if ":" not in line:
            raise FormatError(f"vector line without ':': {line!r}")
        key, value = line.split(":", 1)
        try:
            found[int(key)] = _number(value.strip())
        except ValueError:
            raise FormatError(f"bad vector line {line!r}") from None
    size = m if m is not None else (max(found) + 1 if found else 0)
    if any(not 0 <= e < size for e in found):
        raise FormatError("vector entry outside the edge range")
    return [found.get(e, 0) for e in range(size)]


def read_vector(path, m: int | None = None) -> list:
    return parse_vector(_read(path), m)


def write_vector(x, path):
    _write(path, format_vector(x))


# certificates ---------------------------------------------------------------


def _ints(values) -> str:
    return " ".join(str(v) for v in values)


def format_certificate(cert: ReductionCertificate) -> str:
    rows = [
        f"kind={cert.kind}",
        f"delta={cert.params.delta}",
        f"epsilon={cert.params.epsilon}",
    ]
    for key in sorted(cert.stages):
        rows.append(f"stage.{key}={cert.stages[key]}")
    if cert.kind == "A":
        rows += [f"vertex={cert.vertex}", f"square_degree={cert.square_degree}", f"rule={cert.early_exit_rule}"]
    if cert.H is not None:
        rows.append(f"h_n={cert.H.n}")
        rows.append("h_edges=" + " ".join(f"{u}-{v}" for u, v in cert.H.edges))
    if cert.h_vertices or cert.kind == "B":
        rows.append(f"h_vertices={_ints(cert.h_vertices)}")
    if cert.core or cert.kind == "B":
        rows.append(f"core={_ints(cert.core)}")
    if cert.boundary or cert.kind == "B":
        rows.append(f"boundary={_ints(cert.boundary)}")
    for rec in cert.iterations:
        rows.append(f"iteration=V:{rec.V_size} R:{rec.R_size} g:{rec.g} Z:{','.join(str(z) for z in sorted(rec.Z))}")
    for v, d2 in cert.discrepancies:
        rows.append(f"discrepancy={v} {d2}")
    if cert.reason:
        rows.append(f"reason={cert.reason}")
    return "\n".join(rows) + "\n"


def parse_certificate(text: str) -> ReductionCertificate:
    fields: dict[str, list[str]] = {}
    for line in _lines(text):
        if "=" not in line:
            raise FormatError(f"certificate line without '=': {line!r}")
        key, value = line.split("=", 1)
        fields.setdefault(key.strip(), []).append(value.strip())

    def one(key, default=None):
        return fields.get(key, [default])[-1]

    try:
        params = ReductionParams(int(one("delta")), Fraction(one("epsilon", "1/4")))
        cert = ReductionCertificate(kind=one("kind"), params=params)
        cert.stages = {k[6:]: int(v[-1]) for k, v in fields.items() if k.startswith("stage.")}
        if cert.kind == "A":
            cert.vertex = int(one("vertex"))
            cert.square_degree = int(one("square_degree"))
            cert.early_exit_rule = one("rule")
        if "h_n" in fields:
            pairs = [tuple(int(x) for x in tok.split("-")) for tok in one("h_edges", "").split()]
            cert.H = MultiGraph(int(one("h_n")), pairs)
        cert.h_vertices = [int(x) for x in one("h_vertices", "").split()]
        cert.core = [int(x) for x in one("core", "").split()]
        cert.boundary = [int(x) for x in one("boundary", "").split()]
        for value in fields.get("iteration", []):
            parts = dict(tok.split(":", 1) for tok in value.split())
            Z = frozenset(int(z) for z in parts["Z"].split(",") if z)
            cert.iterations.append(IterationRecord(int(parts["V"]), int(parts["R"]), Z, _number(parts["g"])))
        cert.discrepancies = [tuple(int(x) for x in v.split()) for v in fields.get("discrepancy", [])]
        cert.reason = one("reason", "")
    except (TypeError, ValueError, KeyError) as exc:
        raise FormatError(f"bad certificate: {exc}") from None
    if cert.kind not in ("A", "B", "diagnostic"):
        raise FormatError(f"unknown certificate kind {cert.kind!r}")
    return cert


def read_certificate(path) -> ReductionCertificate:
    return parse_certificate(_read(path))


def write_certificate(cert, path):
    _write(path, format_certificate(cert))


# reports --------------------------------------------------------------------


class RunReport:
    """Ordered ``key=value`` lines; ``elapsed`` is the only field allowed to vary between runs."""

    def __init__(self, command: str):
        self.rows: list[tuple[str, str]] = [("command", command)]

    def add(self, key: str, value):
        if isinstance(value, bool):
            value = str(value).lower()
        elif isinstance(value, float):
            value = f"{value:.12g}"
        self.rows.append((key, str(value)))
        return self

    def text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.rows)
