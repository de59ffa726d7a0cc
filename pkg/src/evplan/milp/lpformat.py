"""CPLEX LP-format writer and a reader for the subset it emits.

Supported sections: ``Maximize``/``Minimize``, ``Subject To``, ``Bounds``,
``Binary`` (``Binaries``/``Bin`` accepted) and ``End``. Backslash starts a
comment.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

from .model import Model, ModelError, VarKind

_BAD_CHARS = re.compile(r"[^A-Za-z0-9!\"#$%&()/,.;?@_`'{}|~]")
_LINE_WIDTH = 72


def lp_name(name: str) -> str:
    """Make ``name`` legal as an LP identifier."""
    s = _BAD_CHARS.sub("_", name)
    if not s or s[0].isdigit() or s[0] == "." or (s[0] in "eE" and len(s) > 1 and (s[1].isdigit() or s[1] in "+-")):
        s = "_" + s
    return s


def _num(a: float) -> str:
    if a == int(a) and abs(a) < 1e15:
        return str(int(a))
    return repr(float(a))


def _expr(coeffs: dict[int, float], names: list[str]) -> list[str]:
    terms = []
    for j in sorted(coeffs):
        a = coeffs[j]
        if a == 0:
            continue
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        coef = "" if mag == 1 else _num(mag) + " "
        terms.append(f"{sign} {coef}{names[j]}")
    if terms and terms[0].startswith("+ "):
        terms[0] = terms[0][2:]
    return terms


def _wrap(head: str, terms: list[str], tail: str = "") -> list[str]:
    lines, cur = [], head
    for t in terms + ([tail] if tail else []):
        if len(cur) + len(t) + 1 > _LINE_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   "
        cur += " " + t
    lines.append(cur)
    return lines


def write_lp(model: Model) -> str:
    names = [lp_name(v.name) for v in model.variables]
    if len(set(names)) != len(names):
        raise ModelError("variable names collide after LP sanitizing")
    out = [f"\\ Problem name: {model.name}"]
    terms = _expr(model.objective, names)
    if not terms and model.objective_constant == 0:
        out.append("\\ constant objective")
    out.append("Maximize" if model.sense == "max" else "Minimize")
    if model.objective_constant:
        c = model.objective_constant
        terms.append(("- " if c < 0 else "+ ") + _num(abs(c)) if terms else _num(c))
    if not terms:
        terms = ["0"]
    out += _wrap(" obj:", terms)
    out.append("Subject To")
    for con in model.constraints:
        t = _expr(dict(con.coeffs), names) or ["0 " + names[0]] if model.variables else ["0"]
        sense = {"<=": "<=", ">=": ">=", "=": "="}[con.sense]
        out += _wrap(f" {lp_name(con.name)}:", t, f"{sense} {_num(con.rhs)}")
    bounds = []
    for v, n in zip(model.variables, names):
        if v.kind is VarKind.BINARY:
            continue
        lo, hi = v.lb, v.ub
        if lo == 0 and math.isinf(hi):
            continue
        if math.isinf(lo) and math.isinf(hi):
            bounds.append(f" {n} free")
        elif math.isinf(hi):
            bounds.append(f" {n} >= {_num(lo)}")
        elif math.isinf(lo):
            bounds.append(f" -inf <= {n} <= {_num(hi)}")
        elif lo == hi:
            bounds.append(f" {n} = {_num(lo)}")
        else:
            bounds.append(f" {_num(lo)} <= {n} <= {_num(hi)}")
    if bounds:
        out.append("Bounds")
        out += bounds
    binaries = [n for v, n in zip(model.variables, names) if v.kind is VarKind.BINARY]
    if binaries:
        out.append("Binary")
        out += _wrap("", binaries)
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp(model: Model, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(write_lp(model), encoding="utf-8")
    return path


_SECTIONS = {
    "maximize": "max", "maximum": "max", "max": "max",
    "minimize": "min", "minimum": "min", "min": "min",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "binary": "bin", "binaries": "bin", "bin": "bin",
    "general": "gen", "generals": "gen", "gen": "gen",
    "end": "end",
}
_TOKEN = re.compile(r"\s*(<=|>=|=<|=>|<|>|=|[+-]|[^\s<>=+-]+)")
_NUMBER = re.compile(r"^(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$|^inf(inity)?$", re.IGNORECASE)


def _tokens(text: str) -> list[str]:
    toks = _TOKEN.findall(text)
    # glue exponent signs back onto numbers split by the +/- token rule
    out: list[str] = []
    for t in toks:
        if out and t.isdigit() and len(out) >= 2 and out[-1] in "+-" and re.match(r"^\d*\.?\d*[eE]$", out[-2] or ""):
            sign = out.pop()
            out[-1] = out[-1] + sign + t
            continue
        out.append(t)
    return out


def _linear(tokens: list[str]) -> tuple[dict[str, float], float]:
    """Parse ``[+|-] [coef] name`` terms; bare numbers accumulate into a constant."""
    coeffs: dict[str, float] = {}
    const = 0.0
    sign, coef = 1.0, None
    for t in tokens:
        if t in "+-":
            if coef is not None:
                const += sign * coef
                sign, coef = 1.0, None
            sign *= -1.0 if t == "-" else 1.0
        elif _NUMBER.match(t):
            if coef is not None:
                raise ModelError(f"two consecutive numbers in LP expression near {t!r}")
            coef = float(t)
        else:
            coeffs[t] = coeffs.get(t, 0.0) + sign * (1.0 if coef is None else coef)
            sign, coef = 1.0, None
    if coef is not None:
        const += sign * coef
    return coeffs, const


def read_lp(path: str | Path) -> Model:
    return parse_lp(Path(path).read_text(encoding="utf-8"))


def parse_lp(text: str) -> Model:
    name = "model"
    blocks: dict[str, list[str]] = {"obj": [], "st": [], "bounds": [], "bin": [], "gen": []}
    sense = None
    section = None
    for raw in text.splitlines():
        if raw.startswith("\\ Problem name:"):
            name = raw.split(":", 1)[1].strip() or name
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = _SECTIONS.get(line.lower())
        if key is not None:
            if key in ("max", "min"):
                sense, section = key, "obj"
            elif key == "end":
                break
            else:
                section = key
            continue
        if section is None:
            raise ModelError(f"LP text outside any section: {line!r}")
        blocks[section].append(line)
    if sense is None:
        raise ModelError("LP file has no objective section")

    # constraints may wrap lines: a statement ends once it has a relation and a rhs
    statements: list[str] = []
    cur = ""
    end_of_statement = re.compile(r"(<=|>=|=<|=>|<|>|=)\s*[+-]?\s*([\d.]+([eE][+-]?\d+)?|inf(inity)?)\s*$", re.I)
    for line in blocks["st"]:
        cur = f"{cur} {line}".strip()
        if end_of_statement.search(cur):
            statements.append(cur)
            cur = ""
    if cur:
        statements.append(cur)

    obj_text = " ".join(blocks["obj"])
    if ":" in obj_text.split()[0] if obj_text else False:
        obj_text = obj_text.split(":", 1)[1]
    obj_coeffs, obj_const = _linear(_tokens(obj_text))

    order: list[str] = []
    seen: set[str] = set()

    def note(n: str) -> None:
        if n not in seen:
            seen.add(n)
            order.append(n)

    for n in obj_coeffs:
        note(n)
    parsed = []
    for k, st in enumerate(statements):
        cname = None
        m = re.match(r"^([^\s:]+)\s*:(.*)$", st)
        if m:
            cname, st = m.group(1), m.group(2)
        rel = re.search(r"(<=|>=|=<|=>|<|>|=)", st)
        if rel is None:
            raise ModelError(f"constraint without relation: {st!r}")
        lhs, rhs = st[: rel.start()], st[rel.end():]
        if not rhs.strip():
            raise ModelError(f"constraint {cname or k + 1} has no right-hand side")
        op = {"<": "<=", "=<": "<=", ">": ">=", "=>": ">="}.get(rel.group(1), rel.group(1))
        lc, lk = _linear(_tokens(lhs))
        rc, rk = _linear(_tokens(rhs))
        for n, a in rc.items():
            lc[n] = lc.get(n, 0.0) - a
        for n in lc:
            note(n)
        parsed.append((cname or f"c{k + 1}", lc, op, rk - lk))

    binaries: list[str] = []
    for line in blocks["bin"] + blocks["gen"]:
        for n in line.split():
            binaries.append(n)
            note(n)
    if blocks["gen"]:
        raise ModelError("general-integer variables are not supported")

    bounds: dict[str, list[float]] = {}
    for line in blocks["bounds"]:
        low = line.lower()
        if low.endswith(" free"):
            n = line.split()[0]
            note(n)
            bounds[n] = [-math.inf, math.inf]
            continue
        parts = re.split(r"(<=|>=|=<|=>|=)", line.replace(" ", ""))
        vals = [p for p in parts if p]
        _apply_bound(vals, bounds, note)

    model = Model(name, sense=sense)
    bin_set = set(binaries)
    for n in order:
        if n in bin_set:
            model.add_var(n, VarKind.BINARY)
        else:
            lo, hi = bounds.get(n, [0.0, math.inf])
            model.add_var(n, VarKind.CONTINUOUS, lo, hi)
    model.set_objective(obj_coeffs, constant=obj_const)
    for cname, coeffs, op, rhs in parsed:
        model.add_constr(coeffs, op, rhs, cname)
    return model


def _to_float(s: str) -> float:
    s = s.lower()
    if s in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if s in ("-inf", "-infinity"):
        return -math.inf
    return float(s)


def _is_num(s: str) -> bool:
    try:
        _to_float(s)
        return True
    except ValueError:
        return False


def _apply_bound(vals: list[str], bounds: dict[str, list[float]], note) -> None:
    norm = [{"=<": "<=", "=>": ">="}.get(v, v) for v in vals]
    if len(norm) == 5:  # lo <= x <= hi
        lo, _, n, _, hi = norm
        note(n)
        bounds[n] = [_to_float(lo), _to_float(hi)]
        return
    if len(norm) != 3:
        raise ModelError(f"cannot parse bound {''.join(vals)!r}")
    a, op, b = norm
    if _is_num(a):
        n, v = b, _to_float(a)
        op = {"<=": ">=", ">=": "<=", "=": "="}[op]
    else:
        n, v = a, _to_float(b)
    note(n)
    cur = bounds.setdefault(n, [0.0, math.inf])
    if op == "<=":
        cur[1] = v
    elif op == ">=":
        cur[0] = v
    else:
        cur[0] = cur[1] = v
