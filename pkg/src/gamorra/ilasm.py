"""Parser and static cost model for shader intermediate-language listings.

A listing is plain text, one instruction per line::

    dcl_input v0.xyz        ; declaration, ignored for costing
    add r0, v0, c0
    mad r1, r0, c1, c2      ; trailing comments allowed

The opcode is the first whitespace-delimited token.  Operands are kept
verbatim and never validated; only opcode counts matter downstream.
Lines starting with ``dcl_`` declare resources and carry no execution
cost, so they are excluded from the histogram.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

COMMENT_CHAR = ";"
DECL_PREFIX = "dcl_"

_OPCODE_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


class IlError(ValueError):
    """Malformed shader listing (bad opcode token, unreadable line)."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class MissingOpcodeCost(KeyError):
    """An opcode appears in a program but not in the stage cost table."""

    def __init__(self, opcode: str, stage: str):
        super().__init__(opcode)
        self.opcode = opcode
        self.stage = stage

    def __str__(self) -> str:
        return f"no cost for opcode {self.opcode!r} in stage {self.stage!r} table"


@dataclass
class ShaderProgram:
    """Static description of one shader: opcode histogram plus bookkeeping."""

    name: str
    opcode_counts: dict[str, int] = field(default_factory=dict)
    instruction_count: int = 0
    declaration_count: int = 0

    def __post_init__(self) -> None:
        for op, n in self.opcode_counts.items():
            if n <= 0:
                raise ValueError(f"opcode count for {op!r} must be positive, got {n}")
        total = sum(self.opcode_counts.values())
        if self.instruction_count != total:
            raise ValueError(
                f"instruction_count {self.instruction_count} != histogram total {total}"
            )


def parse_program(source: str, name: str = "<shader>") -> ShaderProgram:
    """Parse listing text into a ShaderProgram.

    Unknown opcodes are accepted (the vocabulary is open; cost lookup is
    where membership is enforced).  A line whose first token is not a
    plausible opcode raises IlError with the 1-based line number.
    """
    counts: dict[str, int] = {}
    decls = 0
    for line_no, raw in enumerate(source.splitlines(), start=1):
        text = raw.split(COMMENT_CHAR, 1)[0].strip()
        if not text:
            continue
        opcode = text.split(None, 1)[0]
        if not _OPCODE_RE.match(opcode):
            raise IlError(f"malformed opcode token {opcode!r}", line_no)
        if opcode.startswith(DECL_PREFIX):
            decls += 1
            continue
        counts[opcode] = counts.get(opcode, 0) + 1
    return ShaderProgram(
        name=name,
        opcode_counts=counts,
        instruction_count=sum(counts.values()),
        declaration_count=decls,
    )


def complexity(program: ShaderProgram, costs: dict[str, float], stage: str = "?") -> float:
    """Static cost of one invocation: sum of per-opcode cost times count.

    Control flow is not simulated; a loop body parsed N times costs N
    times its body, matching plain static counting.
    """
    total = 0.0
    for opcode, n in sorted(program.opcode_counts.items()):
        try:
            total += costs[opcode] * n
        except KeyError:
            raise MissingOpcodeCost(opcode, stage) from None
    return total
