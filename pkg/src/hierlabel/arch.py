"""Architecture expressions.

Grammar (case-insensitive, whitespace ignored):

    expr  := "s" "(" item ("," item)* ")"
    item  := group | ID
    group := ("wl" | "wc") "(" ID ("," ID)* ")"

A bare ID is a sentence-embedding source; a group bundles word-embedding
sources processed by biLSTM+attention (wl) or convolution+pooling (wc).
Exactly one top-level s(...) is accepted; nesting s is reserved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError

_ID_RE = re.compile(r"[a-z_][a-z0-9_]*")


@dataclass(frozen=True)
class Group:
    kind: str  # "wl" or "wc"
    sources: tuple[str, ...]

    def render(self) -> str:
        return f"{self.kind}({', '.join(self.sources)})"


@dataclass(frozen=True)
class ArchExpr:
    children: tuple = field(default_factory=tuple)

    @property
    def groups(self) -> tuple[Group, ...]:
        return tuple(c for c in self.children if isinstance(c, Group))

    @property
    def sentence_sources(self) -> tuple[str, ...]:
        return tuple(c for c in self.children if isinstance(c, str))

    @property
    def word_sources(self) -> tuple[str, ...]:
        seen = []
        for g in self.groups:
            for s in g.sources:
                if s not in seen:
                    seen.append(s)
        return tuple(seen)

    def render(self) -> str:
        parts = [c.render() if isinstance(c, Group) else c for c in self.children]
        return f"s({', '.join(parts)})"


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            found = self.text[self.pos] if self.pos < len(self.text) else "end of input"
            raise ParseError(f"expected '{ch}', found {found!r}", offset=self.pos)
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        m = _ID_RE.match(self.text.lower(), self.pos)
        if not m:
            raise ParseError("expected an identifier", offset=self.pos)
        self.pos = m.end()
        return m.group(0)


def parse_arch(text: str, word_sources=None, sentence_sources=None) -> ArchExpr:
    """Parse an architecture expression.

    When ``word_sources`` / ``sentence_sources`` are given, every referenced
    id must belong to the corresponding declared set.
    """
    cur = _Cursor(text)
    head_at = cur.pos
    head = cur.ident()
    if head != "s":
        raise ParseError(f"expression must start with 's(', found {head!r}", offset=head_at)
    cur.expect("(")
    children = []
    if cur.peek() == ")":
        raise ParseError("empty s() group", offset=cur.pos)
    while True:
        id_at = cur.pos
        cur.skip_ws()
        id_at = cur.pos
        name = cur.ident()
        if name == "s":
            raise ParseError(
                "nested or repeated s() is reserved; a model has exactly one "
                "sentence-level concatenation",
                offset=id_at,
            )
        if name in ("wl", "wc"):
            cur.expect("(")
            if cur.peek() == ")":
                raise ParseError(f"empty {name}() group", offset=cur.pos)
            sources = []
            while True:
                src_at = cur.pos
                cur.skip_ws()
                src_at = cur.pos
                src = cur.ident()
                if src in ("s", "wl", "wc"):
                    raise ParseError(
                        f"{src!r} cannot appear inside a {name}() group", offset=src_at
                    )
                if word_sources is not None and src not in word_sources:
                    raise ParseError(f"unknown word source {src!r}", offset=src_at)
                sources.append(src)
                if cur.peek() == ",":
                    cur.expect(",")
                    continue
                break
            cur.expect(")")
            children.append(Group(name, tuple(sources)))
        else:
            if sentence_sources is not None and name not in sentence_sources:
                raise ParseError(f"unknown sentence source {name!r}", offset=id_at)
            children.append(name)
        if cur.peek() == ",":
            cur.expect(",")
            continue
        break
    cur.expect(")")
    cur.skip_ws()
    if cur.pos != len(cur.text):
        raise ParseError("trailing input after expression", offset=cur.pos)
    return ArchExpr(tuple(children))


def render_arch(expr: ArchExpr) -> str:
    return expr.render()
