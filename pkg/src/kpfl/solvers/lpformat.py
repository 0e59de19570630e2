"""LP and MPS text export (and re-import) of :class:`~kpfl.models.MilpModel`.

Numbers are written with 17 significant digits so doubles round-trip exactly.
Model metadata rides along in comment lines (``\\`` in LP, ``*`` in MPS),
including a ``meta`` line holding the full metadata as JSON.
"""
from __future__ import annotations

import json
import math
import re
from pathlib import Path

from ..errors import ConfigError, DataError
from ..models import COEFF_LIMIT, Constraint, MilpModel, Variable

TERMS_PER_LINE = 6


def num(x: float) -> str:
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return f"{x:.16e}"


def _validate(model: MilpModel):
    if not model.objective:
        raise DataError("no objective terms")
    coeffs = [c for _, c in model.objective]
    coeffs += [a for con in model.constraints for _, a in con.terms]
    coeffs += [con.rhs for con in model.constraints]
    for c in coeffs:
        if not math.isfinite(c) or abs(c) > COEFF_LIMIT:
            raise DataError(f"coefficient {c!r} exceeds magnitude {COEFF_LIMIT:g}")


def _header(model: MilpModel, mark: str) -> list[str]:
    meta = model.metadata
    lines = [f"{mark} kpfl model"]
    lines.append(f"{mark} kind {meta.get('kind', '')}")
    if "k" in meta:
        lines.append(f"{mark} k {meta['k']}")
    p = meta.get("params")
    if p:
        lines.append(f"{mark} epsilon {num(p['epsilon'])} alpha {num(p['alpha'])} kappa {num(p['kappa'])}")
    cr = meta.get("coeff_range")
    if cr:
        lines.append(f"{mark} coeff_range {num(cr[0])} {num(cr[1])}")
    lines.append(f"{mark} objective_offset {num(model.objective_offset)}")
    c = model.counts()
    lines.append(f"{mark} columns {len(model.variables)} (x {c['x']}, y {c['y']}, aux {c['aux']}) rows {c['constraints']}")
    lines.append(f"{mark} meta {json.dumps(meta, sort_keys=True, separators=(',', ':'))}")
    return lines


def _expr(terms) -> list[str]:
    chunks = []
    for name, c in terms:
        sign = "-" if c < 0 else "+"
        chunks.append(f"{sign} {num(abs(c))} {name}")
    return [" ".join(chunks[i:i + TERMS_PER_LINE]) for i in range(0, len(chunks), TERMS_PER_LINE)] or ["0 x_0"]


def to_lp(model: MilpModel) -> str:
    _validate(model)
    out = _header(model, "\\")
    out.append("Minimize")
    expr = _expr(model.objective)
    out.append(" obj: " + expr[0])
    out += ["   " + e for e in expr[1:]]
    out.append("Subject To")
    for con in model.constraints:
        expr = _expr(con.terms)
        out.append(f" {con.name}: " + expr[0])
        out += ["   " + e for e in expr[1:]]
        out.append(f"   {con.sense} {num(con.rhs)}")
    out.append("Bounds")
    for v in model.variables:
        if v.lb == -math.inf and v.ub == math.inf:
            out.append(f" {v.name} free")
        elif v.lb == v.ub:
            out.append(f" {v.name} = {num(v.lb)}")
        else:
            out.append(f" {num(v.lb)} <= {v.name} <= {num(v.ub)}")
    binaries = [v.name for v in model.variables if v.integer and v.lb == 0 and v.ub == 1]
    generals = [v.name for v in model.variables if v.integer and not (v.lb == 0 and v.ub == 1)]
    for title, names in (("Binaries", binaries), ("Generals", generals)):
        if names:
            out.append(title)
            out += [" " + " ".join(names[i:i + 10]) for i in range(0, len(names), 10)]
    out.append("End")
    return "\n".join(out) + "\n"


def to_mps(model: MilpModel) -> str:
    """MPS with the fixed-format section layout; fields are whitespace separated
    because 17-digit literals do not fit the 12-character fixed columns."""
    _validate(model)
    out = _header(model, "*")
    out.append("NAME          KPFL")
    out.append("ROWS")
    out.append(" N  obj")
    tag = {"<=": "L", ">=": "G", "=": "E"}
    for con in model.constraints:
        out.append(f" {tag[con.sense]}  {con.name}")
    out.append("COLUMNS")
    col_entries = {v.name: [] for v in model.variables}
    for name, c in model.objective:
        col_entries[name].append(("obj", c))
    for con in model.constraints:
        for name, a in con.terms:
            col_entries[name].append((con.name, a))
    in_int = False
    marker = 0
    for v in model.variables:
        if v.integer != in_int:
            kind = "INTORG" if v.integer else "INTEND"
            out.append(f"    MARKER{marker:04d}  'MARKER'  '{kind}'")
            marker += 1
            in_int = v.integer
        entries = col_entries[v.name]
        if not entries:
            out.append(f"    {v.name}  EMPTY")
        for row, c in entries:
            out.append(f"    {v.name}  {row}  {num(c)}")
    if in_int:
        out.append(f"    MARKER{marker:04d}  'MARKER'  'INTEND'")
    out.append("RHS")
    for con in model.constraints:
        if con.rhs != 0:
            out.append(f"    RHS  {con.name}  {num(con.rhs)}")
    out.append("BOUNDS")
    for v in model.variables:
        if v.lb == -math.inf and v.ub == math.inf:
            out.append(f" FR BND  {v.name}")
        elif v.lb == v.ub:
            out.append(f" FX BND  {v.name}  {num(v.lb)}")
        else:
            if v.lb == -math.inf:
                out.append(f" MI BND  {v.name}")
            elif v.lb != 0:
                out.append(f" LO BND  {v.name}  {num(v.lb)}")
            if v.ub == math.inf:
                out.append(f" PL BND  {v.name}")
            else:
                out.append(f" UP BND  {v.name}  {num(v.ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export_model(model: MilpModel, fmt: str, path) -> Path:
    if fmt not in ("lp", "mps"):
        raise ConfigError(f"unknown export format {fmt!r}")
    text = to_lp(model) if fmt == "lp" else to_mps(model)
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc
    return path


# -- readers -------------------------------------------------------------------

_TERM = re.compile(r"([+-])\s*(\S+)\s+([A-Za-z_]\w*)")


def _parse_terms(text):
    terms = []
    pos = 0
    text = text.strip()
    for m in _TERM.finditer(text):
        if text[pos:m.start()].strip():
            raise DataError(f"cannot parse expression near {text[pos:m.start()]!r}")
        coef = float(m.group(2)) * (-1 if m.group(1) == "-" else 1)
        terms.append((m.group(3), coef))
        pos = m.end()
    if text[pos:].strip():
        raise DataError(f"cannot parse expression tail {text[pos:]!r}")
    return tuple(terms)


def _meta_from_comments(lines, mark):
    meta, offset = {}, 0.0
    for ln in lines:
        if not ln.startswith(mark):
            continue
        body = ln[len(mark):].strip()
        if body.startswith("meta "):
            meta = json.loads(body[5:])
        elif body.startswith("objective_offset "):
            offset = float(body.split()[1])
    return meta, offset


def read_lp(text: str) -> MilpModel:
    """Parse LP text written by :func:`to_lp`."""
    lines = text.splitlines()
    meta, offset = _meta_from_comments(lines, "\\")
    section = None
    buf = {}
    order = []
    bounds, ints, seen_vars = {}, set(), []
    objective = ()
    cons = []
    current = None
    for raw in lines:
        if raw.startswith("\\") or not raw.strip():
            continue
        s = raw.strip()
        low = s.lower()
        if low in ("minimize", "subject to", "bounds", "binaries", "generals", "end"):
            section = low
            continue
        if section == "minimize":
            if s.startswith("obj:"):
                s = s[4:]
            buf.setdefault("obj", []).append(s)
        elif section == "subject to":
            m = re.match(r"(\w+):\s*(.*)", s)
            if m:
                current = m.group(1)
                order.append(current)
                buf[current] = [m.group(2)]
            elif re.match(r"(<=|>=|=)\s", s):
                sense, rhs = s.split()
                text_terms = " ".join(buf[current])
                cons.append(Constraint(current, _parse_terms(text_terms), sense, float(rhs)))
            else:
                buf[current].append(s)
        elif section == "bounds":
            parts = s.split()
            if len(parts) == 2 and parts[1] == "free":
                bounds[parts[0]] = (-math.inf, math.inf)
            elif len(parts) == 3 and parts[1] == "=":
                bounds[parts[0]] = (float(parts[2]),) * 2
            elif len(parts) == 5:
                bounds[parts[2]] = (float(parts[0]), float(parts[4]))
            else:
                raise DataError(f"cannot parse bound {s!r}")
            seen_vars.append(parts[0] if len(parts) in (2, 3) else parts[2])
        elif section in ("binaries", "generals"):
            ints.update(s.split())
    if "obj" in buf:
        objective = _parse_terms(" ".join(buf["obj"]))
    variables = tuple(Variable(n, *bounds[n], n in ints) for n in seen_vars)
    return MilpModel(variables, objective, tuple(cons), offset, meta)


def read_mps(text: str) -> MilpModel:
    """Parse MPS text written by :func:`to_mps`."""
    lines = text.splitlines()
    meta, offset = _meta_from_comments(lines, "*")
    section = None
    senses, row_order = {}, []
    col_order, integer = [], {}
    entries = {}
    rhs = {}
    bounds = {}
    in_int = False
    rev = {"L": "<=", "G": ">=", "E": "="}
    for raw in lines:
        if raw.startswith("*") or not raw.strip():
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            continue
        f = raw.split()
        if section == "ROWS":
            if f[0] != "N":
                senses[f[1]] = rev[f[0]]
                row_order.append(f[1])
        elif section == "COLUMNS":
            if len(f) == 3 and f[1] == "'MARKER'":
                in_int = f[2] == "'INTORG'"
                continue
            name = f[0]
            if name not in integer:
                col_order.append(name)
                integer[name] = in_int
            if f[1:] == ["EMPTY"]:
                continue
            for row, val in zip(f[1::2], f[2::2]):
                entries.setdefault(name, []).append((row, float(val)))
        elif section == "RHS":
            for row, val in zip(f[1::2], f[2::2]):
                rhs[row] = float(val)
        elif section == "BOUNDS":
            typ, name = f[0], f[2]
            lb, ub = bounds.get(name, (0.0, math.inf))
            if typ == "FR":
                lb, ub = -math.inf, math.inf
            elif typ == "FX":
                lb = ub = float(f[3])
            elif typ == "MI":
                lb = -math.inf
            elif typ == "PL":
                ub = math.inf
            elif typ == "LO":
                lb = float(f[3])
            elif typ == "UP":
                ub = float(f[3])
            bounds[name] = (lb, ub)
    objective = []
    rows = {r: [] for r in row_order}
    for name in col_order:
        for row, val in entries.get(name, []):
            if row == "obj":
                objective.append((name, val))
            else:
                rows[row].append((name, val))
    # column-major storage: terms within a row come back in column order
    cons = tuple(Constraint(r, tuple(rows[r]), senses[r], rhs.get(r, 0.0)) for r in row_order)
    variables = tuple(Variable(n, *bounds.get(n, (0.0, math.inf)), integer[n]) for n in col_order)
    return MilpModel(variables, tuple(objective), cons, offset, meta)
