"""
Network Parser
Reads and writes the .crn reaction-network text format.

    # comment
    0 <-> A+B            both directions, rate 1
    B <-> 2B [2, 0.5]    forward 2, backward 0.5
    A+B -> 6A+3B [2.5]

Species are declared implicitly, in order of first appearance.
"""

import logging
import math
import re

from modules.errors import ParseError, SourceSpan
from modules.net_model import Complex, Reaction, ReactionSystem

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<arrow><->|->)
  | (?P<int>\d+(?![\d.]))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<plus>\+)
""", re.VERBOSE)

_RATES = re.compile(r'\[([^\[\]]*)\]\s*$')


class _Line:
    """Token cursor over one reaction statement."""

    def __init__(self, text, line_no, line_start, source):
        self.text = text
        self.line_no = line_no
        self.line_start = line_start
        self.source = source
        self.tokens = self._tokenize()
        self.pos = 0

    def span(self, col, length=1):
        start = self.line_start + col
        prefix = self.source[:start].encode('utf-8')
        token = self.source[start:start + max(length, 1)].encode('utf-8')
        return SourceSpan(self.line_no, col + 1, len(prefix), len(prefix) + max(len(token), 1))

    def error(self, message, col, length=1, code='syntax_error'):
        return ParseError(message, code=code, span=self.span(col, length))

    def _tokenize(self):
        tokens = []
        col = 0
        while col < len(self.text):
            match = _TOKEN.match(self.text, col)
            if match is None:
                raise self.error(f"unexpected character {self.text[col]!r}", col)
            kind = match.lastgroup
            if kind != 'ws':
                tokens.append((kind, match.group(), col))
            col = match.end()
        return tokens

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        token = self.peek()
        self.pos += 1
        return token

    def end_col(self):
        return len(self.text.rstrip())


def _parse_complex(line, species):
    """complex := "0" | term ("+" term)* ; term := [integer] identifier"""
    token = line.peek()
    if token is None:
        raise line.error("expected a complex", line.end_col())
    kind, value, col = token
    if kind == 'int' and value == '0':
        nxt = line.tokens[line.pos + 1] if line.pos + 1 < len(line.tokens) else None
        if nxt is None or nxt[0] != 'ident':
            line.take()
            return {}
    counts = {}
    while True:
        token = line.take()
        if token is None:
            raise line.error("expected a species term", line.end_col())
        kind, value, col = token
        coeff = 1
        if kind == 'int':
            coeff = int(value)
            if coeff == 0:
                raise line.error("coefficient 0 is not allowed; write '0' for the empty complex",
                                 col, len(value))
            token = line.take()
            if token is None or token[0] != 'ident':
                at = token[2] if token else line.end_col()
                raise line.error("expected a species name after the coefficient", at)
            kind, value, col = token
        if kind != 'ident':
            raise line.error(f"expected a species term, found {value!r}", col, len(value))
        if value not in species:
            species.append(value)
        counts[value] = counts.get(value, 0) + coeff
        token = line.peek()
        if token is None or token[0] != 'plus':
            return counts
        line.take()


def _parse_rates(text, line, offset):
    rates = []
    col = offset
    for piece in text.split(','):
        stripped = piece.strip()
        lead = len(piece) - len(piece.lstrip())
        try:
            rate = float(stripped)
        except ValueError:
            raise line.error(f"invalid rate {stripped!r}", col + lead, len(stripped) or 1)
        if not (math.isfinite(rate) and rate > 0):
            raise line.error(f"rate must be finite and positive, got {stripped!r}",
                             col + lead, len(stripped), code='bad_rate')
        rates.append(rate)
        col += len(piece) + 1
    return rates


def parse_network(text):
    """
    Parse network source text into a ReactionSystem.

    Args:
        text: .crn source

    Returns:
        ReactionSystem with species in order of first appearance

    Raises:
        ParseError: with the SourceSpan of the offending token
    """
    species = []
    statements = []
    line_start = 0
    for line_no, raw in enumerate(text.split('\n'), start=1):
        body = raw.split('#', 1)[0].rstrip('\r')
        if body.strip():
            rates_text = None
            rates_col = None
            match = _RATES.search(body)
            if match:
                rates_text = match.group(1)
                rates_col = match.start(1)
                body_expr = body[:match.start()]
            else:
                body_expr = body
            line = _Line(body_expr, line_no, line_start, text)
            if '[' in body_expr or ']' in body_expr:
                col = max(body_expr.find('['), body_expr.find(']'))
                raise line.error("malformed rate list", col)
            source = _parse_complex(line, species)
            token = line.take()
            if token is None or token[0] != 'arrow':
                at = token[2] if token else line.end_col()
                raise line.error("expected '->' or '<->'", at)
            arrow, arrow_col = token[1], token[2]
            product = _parse_complex(line, species)
            trailing = line.peek()
            if trailing is not None:
                raise line.error(f"unexpected {trailing[1]!r}", trailing[2], len(trailing[1]))
            rates = _parse_rates(rates_text, line, rates_col) if rates_text is not None else []
            if len(rates) > 2:
                raise line.error("at most two rates are allowed", rates_col, len(rates_text),
                                 code='rate_count')
            if arrow == '->' and len(rates) == 2:
                raise line.error("'->' takes a single rate", rates_col, len(rates_text),
                                 code='rate_count')
            if source == product:
                raise line.error("self-loop reaction", arrow_col, len(arrow), code='self_loop')
            statements.append((source, arrow, product, rates))
        line_start += len(raw) + 1

    dim = len(species)

    def vector(counts):
        return Complex(tuple(counts.get(name, 0) for name in species))

    reactions = []
    for source, arrow, product, rates in statements:
        forward = rates[0] if rates else 1.0
        reactions.append(Reaction(vector(source), vector(product), forward))
        if arrow == '<->':
            backward = rates[1] if len(rates) == 2 else forward
            reactions.append(Reaction(vector(product), vector(source), backward))
    logger.debug(f"parsed {len(reactions)} reactions over {dim} species")
    return ReactionSystem(tuple(species), tuple(reactions))


def parse_network_file(path):
    with open(path, 'r', encoding='utf-8') as handle:
        return parse_network(handle.read())


def format_rate(rate):
    rate = float(rate)
    return str(int(rate)) if rate.is_integer() else repr(rate)


def serialize_network(system):
    """Canonical text: one statement per line, reversible pairs merged into '<->'."""
    lines = []
    emitted = set()
    for index, reaction in enumerate(system.reactions):
        if index in emitted:
            continue
        emitted.add(index)
        src = reaction.source.label(system.species)
        prod = reaction.product.label(system.species)
        reverse = system.reaction_index(reaction.product, reaction.source)
        if reverse is not None and reverse not in emitted:
            emitted.add(reverse)
            back = system.reactions[reverse].rate
            lines.append(f"{src} <-> {prod} [{format_rate(reaction.rate)}, {format_rate(back)}]")
        else:
            lines.append(f"{src} -> {prod} [{format_rate(reaction.rate)}]")
    return '\n'.join(lines)
