"""Procedural building code: types, parser, serializer, regularizer and expander.

The language describes a rectangular building as stacked levels, each level as
up to four facade item lists. Repeat groups ``( ... )*`` tile to fill the
facade; ``*``-marked tokens stretch to absorb residual width.

    building B {
      dims 8 6 9
      level L1 x 3 {
        C_E (P1 W1)* C_E | C_E W2* C_E
      }
    }

All functions here are pure; ASTs are immutable in practice (dataclasses are
never mutated after construction).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

KEYWORDS = ("building", "level", "dims")

FACADE_NAMES = ("front", "right", "back", "left")

# rotation about z for facade frames at 0, 90, 180, 270 degrees
_FACADE_ROT = [
    np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
    np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
    np.array([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]),
    np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
]

WIDTH_TOL = 1e-9


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Span:
    """1-based source range; end_col is exclusive."""

    line: int = 0
    col: int = 0
    end_line: int = 0
    end_col: int = 0

    def to_json(self) -> dict:
        return {"line": self.line, "col": self.col,
                "end_line": self.end_line, "end_col": self.end_col}


class GrammarError(Exception):
    """Base for all procedural-code errors; carries a source span when known."""

    def __init__(self, message: str, span: Span | None = None):
        super().__init__(message)
        self.message = message
        self.span = span or Span()

    def to_json(self) -> dict:
        return {"error": type(self).__name__, "message": self.message,
                **self.span.to_json()}


class ParseError(GrammarError):
    pass


class ResolveError(GrammarError):
    def __init__(self, message: str, problems: "list[tuple[str, Span]]" = ()):  # noqa: UP037
        first = problems[0][1] if problems else None
        super().__init__(message, first)
        self.problems = list(problems)


class ExpandError(GrammarError):
    pass


class AmbiguityError(ExpandError):
    pass


class InfeasibleDimensionsError(ExpandError):
    pass


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AssetSpec:
    """Catalog entry for one placeable asset: id, bbox extent and pivot offset.

    The asset's local bounding box is [-pivot, extent - pivot]; the pivot is
    where the local origin sits measured from the box's min corner.
    """

    id: str
    extent: np.ndarray  # (3,) meters
    pivot: np.ndarray   # (3,) meters

    def __post_init__(self):
        object.__setattr__(self, "extent", np.asarray(self.extent, dtype=np.float64))
        object.__setattr__(self, "pivot", np.asarray(self.pivot, dtype=np.float64))
        if not self.id or not _is_ident(self.id):
            raise ValueError(f"asset id {self.id!r} is not a valid token")
        if self.extent.shape != (3,) or np.any(self.extent <= 0):
            raise ValueError(f"asset {self.id}: extent components must be positive")
        if self.pivot.shape != (3,):
            raise ValueError(f"asset {self.id}: pivot must be a 3-vector")

    @property
    def box_min(self) -> np.ndarray:
        return -self.pivot

    @property
    def box_max(self) -> np.ndarray:
        return self.extent - self.pivot

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def to_json(self) -> dict:
        return {"id": self.id, "extent": self.extent.tolist(), "pivot": self.pivot.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "AssetSpec":
        return cls(d["id"], np.array(d["extent"], dtype=float), np.array(d["pivot"], dtype=float))

    @classmethod
    def centered(cls, id: str, extent) -> "AssetSpec":
        extent = np.asarray(extent, dtype=np.float64)
        return cls(id, extent, extent / 2.0)


@dataclass(frozen=True, eq=False)
class InstanceTransform:
    """Placement of one asset instance: x' = R @ (S * x) + T."""

    R: np.ndarray  # (3, 3) rotation
    T: np.ndarray  # (3,) meters
    S: np.ndarray  # (3,) positive scale factors

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64)
        T = np.asarray(self.T, dtype=np.float64)
        S = np.asarray(self.S, dtype=np.float64)
        if R.shape != (3, 3) or T.shape != (3,) or S.shape != (3,):
            raise ValueError("InstanceTransform fields must be 3x3, 3, 3")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9 or np.linalg.det(R) < 0:
            raise ValueError("R must be orthonormal with determinant +1")
        if np.any(S <= 0):
            raise ValueError("scale factors must be positive")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "S", S)

    @classmethod
    def identity(cls) -> "InstanceTransform":
        return cls(np.eye(3), np.zeros(3), np.ones(3))

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return (self.S * x) @ self.R.T + self.T

    def as_affine(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.R @ np.diag(self.S)
        m[:3, 3] = self.T
        return m

    def to_json(self) -> dict:
        return {"R": self.R.reshape(-1).tolist(), "T": self.T.tolist(), "S": self.S.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "InstanceTransform":
        return cls(np.array(d["R"], dtype=float).reshape(3, 3),
                   np.array(d["T"], dtype=float), np.array(d["S"], dtype=float))


@dataclass(frozen=True)
class Token:
    asset_id: str
    scalable: bool = False
    span: Span = field(default=Span(), compare=False, repr=False)


@dataclass(frozen=True)
class Group:
    items: tuple
    repeatable: bool = False
    span: Span = field(default=Span(), compare=False, repr=False)


@dataclass(frozen=True)
class Facade:
    items: tuple  # of Token | Group
    span: Span = field(default=Span(), compare=False, repr=False)


@dataclass(frozen=True)
class Level:
    id: str
    repeat_count: int
    facades: tuple  # of Facade, length 1, 2 or 4
    span: Span = field(default=Span(), compare=False, repr=False)


@dataclass(frozen=True)
class ProceduralCode:
    building_id: str
    dims: tuple | None  # (length, width, height) meters
    levels: tuple       # of Level, bottom to top
    span: Span = field(default=Span(), compare=False, repr=False)


@dataclass(frozen=True, eq=False)
class InstantiationEntry:
    asset_id: str
    transform: InstanceTransform
    variance_index: int


@dataclass(frozen=True, eq=False)
class InstantiationList:
    entries: tuple  # of InstantiationEntry

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def count_per_asset(self) -> dict:
        out: dict = {}
        for e in self.entries:
            out[e.asset_id] = out.get(e.asset_id, 0) + 1
        return out

    def allclose(self, other: "InstantiationList", tol: float = 1e-12) -> bool:
        if len(self) != len(other):
            return False
        for a, b in zip(self.entries, other.entries):
            if a.asset_id != b.asset_id or a.variance_index != b.variance_index:
                return False
            if not (np.allclose(a.transform.R, b.transform.R, atol=tol)
                    and np.allclose(a.transform.T, b.transform.T, atol=tol)
                    and np.allclose(a.transform.S, b.transform.S, atol=tol)):
                return False
        return True

    def to_json(self) -> list:
        return [{"asset_id": e.asset_id, **e.transform.to_json(),
                 "variance_index": e.variance_index} for e in self.entries]

    @classmethod
    def from_json(cls, rows: list) -> "InstantiationList":
        entries = []
        counters: dict = {}
        for row in rows:
            aid = row["asset_id"]
            vi = row.get("variance_index")
            if vi is None:
                vi = counters.get(aid, 0)
            counters[aid] = max(counters.get(aid, 0), vi + 1)
            entries.append(InstantiationEntry(aid, InstanceTransform.from_json(row), int(vi)))
        return cls(tuple(entries))


def load_manifest(rows: list) -> "list[AssetSpec]":
    specs = [AssetSpec.from_json(r) if isinstance(r, dict) else r for r in rows]
    seen: set = set()
    for s in specs:
        if s.id in seen:
            raise ResolveError(f"duplicate asset id {s.id!r} in manifest")
        seen.add(s.id)
    return specs


def manifest_to_json(specs: "list[AssetSpec]") -> list:
    return [s.to_json() for s in specs]


# ---------------------------------------------------------------------------
# lexer
# ---------------------------------------------------------------------------

def _is_ident(s: str) -> bool:
    if not s or s in KEYWORDS:
        return False
    if not (s[0].isalpha() or s[0] == "_"):
        return False
    return all(c.isalnum() or c == "_" for c in s)


@dataclass(frozen=True)
class _Tok:
    kind: str   # IDENT NUMBER LBRACE RBRACE LPAREN RPAREN PIPE STAR KW EOF
    text: str
    span: Span


_PUNCT = {"{": "LBRACE", "}": "RBRACE", "(": "LPAREN", ")": "RPAREN",
          "|": "PIPE", "*": "STAR"}


def _lex(text: str) -> "list[_Tok]":
    toks = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        start = Span(line, col, line, col + 1)
        if c in _PUNCT:
            toks.append(_Tok(_PUNCT[c], c, start))
            i += 1
            col += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "KW" if word in KEYWORDS else "IDENT"
            toks.append(_Tok(kind, word, Span(line, col, line, col + (j - i))))
            col += j - i
            i = j
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] in ".eE+-"):
                # stop a trailing +/- that is not an exponent sign
                if text[j] in "+-" and text[j - 1] not in "eE":
                    break
                j += 1
            word = text[i:j]
            try:
                float(word)
            except ValueError:
                raise ParseError(f"malformed number {word!r}", Span(line, col, line, col + (j - i)))
            toks.append(_Tok("NUMBER", word, Span(line, col, line, col + (j - i))))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", start)
    toks.append(_Tok("EOF", "", Span(line, col, line, col)))
    return toks


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.pos = 0

    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def expect(self, kind: str, what: str) -> _Tok:
        t = self.peek()
        if t.kind != kind:
            got = t.text or "end of input"
            raise ParseError(f"expected {what}, got {got!r}", t.span)
        return self.next()

    def expect_kw(self, word: str) -> _Tok:
        t = self.peek()
        if t.kind != "KW" or t.text != word:
            got = t.text or "end of input"
            raise ParseError(f"expected {word!r}, got {got!r}", t.span)
        return self.next()

    def program(self) -> "list[ProceduralCode]":
        buildings = [self.building()]
        while self.peek().kind != "EOF":
            buildings.append(self.building())
        return buildings

    def building(self) -> ProceduralCode:
        start = self.expect_kw("building")
        name = self.expect("IDENT", "building name")
        self.expect("LBRACE", "'{'")
        dims = None
        if self.peek().kind == "KW" and self.peek().text == "dims":
            dspan = self.next().span
            vals = []
            for _ in range(3):
                t = self.expect("NUMBER", "dimension value")
                vals.append(float(t.text))
            if any(v <= 0 for v in vals):
                raise ParseError("dims components must be positive", dspan)
            dims = tuple(vals)
        levels = [self.level()]
        while self.peek().kind == "KW" and self.peek().text == "level":
            levels.append(self.level())
        end = self.expect("RBRACE", "'}' closing the building")
        return ProceduralCode(name.text, dims, tuple(levels),
                              _join(start.span, end.span))

    def level(self) -> Level:
        start = self.expect_kw("level")
        name = self.expect("IDENT", "level name")
        count = 1
        if (self.peek().kind == "IDENT" and self.peek().text == "x"
                and self.peek(1).kind == "NUMBER"):
            self.next()
            t = self.next()
            if "." in t.text or "e" in t.text or "E" in t.text:
                raise ParseError("repeat count must be an integer", t.span)
            count = int(t.text)
            if count < 1:
                raise ParseError("repeat count must be at least 1", t.span)
        self.expect("LBRACE", "'{'")
        facades = [self.facade()]
        while self.peek().kind == "PIPE":
            self.next()
            facades.append(self.facade())
        end = self.expect("RBRACE", "'}' closing the level")
        return Level(name.text, count, tuple(facades), _join(start.span, end.span))

    def facade(self) -> Facade:
        items = [self.item()]
        while self.peek().kind in ("IDENT", "LPAREN"):
            items.append(self.item())
        span = _join(items[0].span, items[-1].span)
        return Facade(tuple(items), span)

    def item(self):
        t = self.peek()
        if t.kind == "LPAREN":
            start = self.next()
            inner = [self.item()]
            while self.peek().kind in ("IDENT", "LPAREN"):
                inner.append(self.item())
            end = self.expect("RPAREN", "')' closing the group")
            span = _join(start.span, end.span)
            if self.peek().kind == "STAR":
                span = _join(span, self.next().span)
                return Group(tuple(inner), True, span)
            return Group(tuple(inner), False, span)
        if t.kind == "IDENT":
            tok = self.next()
            span = tok.span
            if self.peek().kind == "STAR":
                span = _join(span, self.next().span)
                return Token(tok.text, True, span)
            return Token(tok.text, False, span)
        got = t.text or "end of input"
        raise ParseError(f"expected an asset token or '(', got {got!r}", t.span)


def _join(a: Span, b: Span) -> Span:
    return Span(a.line, a.col, b.end_line, b.end_col)


def parse(text: str) -> ProceduralCode:
    """Parse exactly one building definition."""
    buildings = parse_program(text)
    if len(buildings) != 1:
        raise ParseError(f"expected exactly one building, found {len(buildings)}",
                         buildings[1].span)
    return buildings[0]


def parse_program(text: str) -> "list[ProceduralCode]":
    """Parse a file that may hold several building definitions."""
    return _Parser(text).program()


# ---------------------------------------------------------------------------
# serializer
# ---------------------------------------------------------------------------

def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _item_text(item) -> str:
    if isinstance(item, Token):
        return item.asset_id + ("*" if item.scalable else "")
    inner = " ".join(_item_text(i) for i in item.items)
    return f"({inner})" + ("*" if item.repeatable else "")


def serialize(code: ProceduralCode) -> str:
    """Canonical text form; parse(serialize(c)) is structurally equal to c."""
    lines = [f"building {code.building_id} {{"]
    if code.dims is not None:
        lines.append("  dims " + " ".join(_fmt_num(v) for v in code.dims))
    for lvl in code.levels:
        head = f"  level {lvl.id}"
        if lvl.repeat_count != 1:
            head += f" x {lvl.repeat_count}"
        body = " | ".join(" ".join(_item_text(i) for i in f.items) for f in lvl.facades)
        lines.append(head + " { " + body + " }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize_program(buildings: "list[ProceduralCode]") -> str:
    return "\n".join(serialize(b) for b in buildings)


# ---------------------------------------------------------------------------
# resolve
# ---------------------------------------------------------------------------

def _walk_tokens(items):
    for it in items:
        if isinstance(it, Token):
            yield it
        else:
            yield from _walk_tokens(it.items)


def code_tokens(code: ProceduralCode):
    for lvl in code.levels:
        for fac in lvl.facades:
            yield from _walk_tokens(fac.items)


def resolve(code: ProceduralCode, manifest: "list[AssetSpec]") -> ProceduralCode:
    """Check every token against the manifest; report all unknown ids at once."""
    specs = load_manifest(manifest)
    known = {s.id for s in specs}
    problems = [(t.asset_id, t.span) for t in code_tokens(code) if t.asset_id not in known]
    if problems:
        names = ", ".join(sorted({p[0] for p in problems}))
        raise ResolveError(f"unknown asset ids: {names}", problems)
    return code


# ---------------------------------------------------------------------------
# regularize
# ---------------------------------------------------------------------------

def _best_tandem_repeat(seq: "list[str]"):
    """Best (start, period, reps) by coverage, then longer period, then earlier start."""
    n = len(seq)
    best = None
    for period in range(1, n // 2 + 1):
        for start in range(0, n - 2 * period + 1):
            unit = seq[start:start + period]
            reps = 1
            while (start + (reps + 1) * period <= n
                   and seq[start + reps * period:start + (reps + 1) * period] == unit):
                reps += 1
            if reps < 2:
                continue
            key = (reps * period, period, -start)
            if best is None or key > best[0]:
                best = (key, start, period, reps)
    if best is None:
        return None
    _, start, period, reps = best
    return start, period, reps


def _regularize_sequence(seq: "list[str]") -> tuple:
    found = _best_tandem_repeat(seq)
    if found is None:
        return tuple(Token(t) for t in seq)
    start, period, reps = found
    items = [Token(t) for t in seq[:start]]
    items.append(Group(tuple(Token(t) for t in seq[start:start + period]), True))
    items.extend(Token(t) for t in seq[start + reps * period:])
    return tuple(items)


def regularize(raw_levels: "list[list[str]]", building_id: str = "B") -> ProceduralCode:
    """Compress raw per-level token sequences into regular procedural code.

    Each raw level is one flat facade sequence applied to all four sides.
    Maximal tandem repeats become repeat groups; identical adjacent levels
    merge into one level with a repeat count.
    """
    if not raw_levels or any(not lvl for lvl in raw_levels):
        raise ValueError("raw_levels must be a nonempty list of nonempty sequences")
    facades = [Facade(_regularize_sequence(list(lvl))) for lvl in raw_levels]
    levels = []
    for fac in facades:
        if levels and levels[-1][0].items == fac.items:
            levels[-1][1] += 1
        else:
            levels.append([fac, 1])
    out = tuple(Level(f"L{i + 1}", count, (fac,)) for i, (fac, count) in enumerate(levels))
    return ProceduralCode(building_id, None, out)


def literal_code(raw_levels: "list[list[str]]", building_id: str = "B") -> ProceduralCode:
    """Uncompressed code: every raw token fixed, one level per sequence."""
    levels = tuple(
        Level(f"L{i + 1}", 1, (Facade(tuple(Token(t) for t in lvl)),))
        for i, lvl in enumerate(raw_levels)
    )
    return ProceduralCode(building_id, None, levels)


# ---------------------------------------------------------------------------
# expand
# ---------------------------------------------------------------------------

def _flatten_facade(facade: Facade):
    """Split into (prefix tokens, repeat-group tokens or None, suffix tokens)."""
    prefix: list = []
    group: "list | None" = None
    suffix: list = []

    def walk(items, inside_repeat):
        nonlocal group
        for it in items:
            if isinstance(it, Token):
                if inside_repeat:
                    group.append(it)
                elif group is None:
                    prefix.append(it)
                else:
                    suffix.append(it)
            elif it.repeatable:
                if inside_repeat or group is not None:
                    raise AmbiguityError(
                        "facade has more than one repeatable group", it.span)
                group = []
                walk(it.items, True)
            else:
                walk(it.items, inside_repeat)

    walk(facade.items, False)
    return prefix, group, suffix


def _facade_min_width(facade: Facade, widths: dict) -> float:
    prefix, group, suffix = _flatten_facade(facade)
    return sum(widths[t.asset_id] for t in prefix + suffix if not t.scalable)


def _broadcast_facades(level: Level) -> "list[Facade]":
    f = level.facades
    if len(f) == 1:
        return [f[0], f[0], f[0], f[0]]
    if len(f) == 2:
        return [f[0], f[1], f[0], f[1]]
    if len(f) == 4:
        return list(f)
    raise ExpandError(
        f"level {level.id!r} must have 1, 2 or 4 facades, found {len(f)}", level.span)


def _place_facade(facade: Facade, facade_idx: int, length: float, z0: float,
                  s_z: float, level: Level, specs: dict,
                  footprint: "tuple[float, float]") -> "list[tuple[str, InstanceTransform]]":
    widths = {aid: float(s.extent[0]) for aid, s in specs.items()}
    prefix, group, suffix = _flatten_facade(facade)
    fixed_w = sum(widths[t.asset_id] for t in prefix + suffix)

    seq = list(prefix)
    if group is not None:
        gw = sum(widths[t.asset_id] for t in group)
        free = length - fixed_w
        n_rep = max(int(math.floor((free + WIDTH_TOL) / gw)), 0)
        for _ in range(n_rep):
            seq.extend(group)
    else:
        n_rep, gw = 0, 0.0
    seq.extend(suffix)

    where = f"facade '{FACADE_NAMES[facade_idx]}' of level '{level.id}'"
    scal_w = sum(widths[t.asset_id] for t in seq if t.scalable)
    nonscal_w = sum(widths[t.asset_id] for t in seq if not t.scalable)
    residual = length - scal_w - nonscal_w

    scales = [1.0] * len(seq)
    if scal_w > 0.0:
        gamma = (length - nonscal_w) / scal_w
        if gamma <= WIDTH_TOL:
            raise InfeasibleDimensionsError(
                f"{where}: fixed tokens need {nonscal_w:.6g} m of {length:.6g} m, "
                "leaving no room for scalable tokens", facade.span)
        scales = [gamma if t.scalable else 1.0 for t in seq]
    elif abs(residual) <= 1e-6:
        pass
    elif group is not None and n_rep > 0:
        gamma_g = (length - fixed_w) / (n_rep * gw)
        if gamma_g <= WIDTH_TOL:
            raise InfeasibleDimensionsError(
                f"{where}: fixed tokens exceed the facade length {length:.6g} m",
                facade.span)
        first = len(prefix)
        for i in range(first, first + n_rep * len(group)):
            scales[i] = gamma_g
    else:
        raise InfeasibleDimensionsError(
            f"{where}: token widths sum to {scal_w + nonscal_w:.6g} m but the facade "
            f"is {length:.6g} m and nothing can absorb the difference", facade.span)

    R = _FACADE_ROT[facade_idx]
    L, W = footprint
    origin = [np.array([0.0, 0.0, 0.0]), np.array([L, 0.0, 0.0]),
              np.array([L, W, 0.0]), np.array([0.0, W, 0.0])][facade_idx]
    placed = []
    u = 0.0
    for t, s_x in zip(seq, scales):
        spec = specs[t.asset_id]
        S = np.array([s_x, 1.0, s_z])
        local = np.array([u + s_x * spec.pivot[0], spec.pivot[1], z0 + s_z * spec.pivot[2]])
        T = R @ local + origin
        placed.append((t.asset_id, InstanceTransform(R.copy(), T, S)))
        u += s_x * spec.extent[0]
    return placed


def _level_height(level: Level, specs: dict) -> float:
    h = 0.0
    for fac in level.facades:
        for t in _walk_tokens(fac.items):
            h = max(h, float(specs[t.asset_id].extent[2]))
    return h


def natural_dims(code: ProceduralCode, manifest: "list[AssetSpec]") -> tuple:
    """Dims at which every facade fits its token widths at scale 1."""
    specs = {s.id: s for s in load_manifest(manifest)}
    resolve(code, manifest)
    widths = {aid: float(s.extent[0]) for aid, s in specs.items()}
    max_w = 0.0
    for lvl in code.levels:
        for fac in lvl.facades:
            prefix, group, suffix = _flatten_facade(fac)
            w = sum(widths[t.asset_id] for t in prefix + suffix)
            if group is not None:
                w += 2 * sum(widths[t.asset_id] for t in group)
            max_w = max(max_w, w)
    height = sum(lvl.repeat_count * _level_height(lvl, specs) for lvl in code.levels)
    return (max_w, max_w, height)


def raw_dims(raw_levels: "list[list[str]]", manifest: "list[AssetSpec]") -> tuple:
    """Dims at which the literal expansion of raw sequences is exact."""
    specs = {s.id: s for s in load_manifest(manifest)}
    widths = [sum(float(specs[t].extent[0]) for t in lvl) for lvl in raw_levels]
    if max(widths) - min(widths) > 1e-9:
        raise ValueError("raw levels must share one facade width")
    height = sum(max(float(specs[t].extent[2]) for t in lvl) for lvl in raw_levels)
    return (widths[0], widths[0], height)


def expand(code: ProceduralCode, manifest: "list[AssetSpec]",
           dims: "tuple | None" = None) -> InstantiationList:
    """Instantiate a building at the given (length, width, height).

    Fixed tokens keep their catalog width; the repeatable group fills the
    remaining width with whole repetitions; leftover width stretches scalable
    tokens (or the group itself when nothing is marked scalable). The height
    retargets the most-repeated level's count, then a uniform vertical scale
    lands the total exactly.
    """
    resolve(code, manifest)
    specs = {s.id: s for s in load_manifest(manifest)}
    if dims is None:
        dims = code.dims
    if dims is None:
        raise ExpandError("no dims given and the code declares none", code.span)
    L, W, H = (float(v) for v in dims)
    if L <= 0 or W <= 0 or H <= 0:
        raise ExpandError("dims must be positive", code.span)

    heights = [_level_height(lvl, specs) for lvl in code.levels]
    counts = [lvl.repeat_count for lvl in code.levels]
    natural_h = sum(c * h for c, h in zip(counts, heights))
    if natural_h <= 0:
        raise ExpandError("building has zero natural height", code.span)
    extra = H - natural_h
    if abs(extra) > WIDTH_TOL:
        j = max(range(len(counts)), key=lambda i: (counts[i], -i))
        counts[j] = max(1, counts[j] + int(round(extra / heights[j])))
    stacked = sum(c * h for c, h in zip(counts, heights))
    s_z = H / stacked

    entries: list = []
    var_counters: dict = {}
    z = 0.0
    for lvl, count, h in zip(code.levels, counts, heights):
        facades = _broadcast_facades(lvl)
        for _ in range(count):
            for f_idx, fac in enumerate(facades):
                length = L if f_idx in (0, 2) else W
                for asset_id, tf in _place_facade(fac, f_idx, length, z, s_z,
                                                  lvl, specs, (L, W)):
                    vi = var_counters.get(asset_id, 0)
                    var_counters[asset_id] = vi + 1
                    entries.append(InstantiationEntry(asset_id, tf, vi))
            z += h * s_z
    return InstantiationList(tuple(entries))


__all__ = [
    "AmbiguityError",
    "AssetSpec",
    "ExpandError",
    "FACADE_NAMES",
    "Facade",
    "GrammarError",
    "Group",
    "InfeasibleDimensionsError",
    "InstanceTransform",
    "InstantiationEntry",
    "InstantiationList",
    "Level",
    "ParseError",
    "ProceduralCode",
    "ResolveError",
    "Span",
    "Token",
    "code_tokens",
    "expand",
    "literal_code",
    "load_manifest",
    "manifest_to_json",
    "natural_dims",
    "parse",
    "parse_program",
    "raw_dims",
    "regularize",
    "resolve",
    "serialize",
    "serialize_program",
]
