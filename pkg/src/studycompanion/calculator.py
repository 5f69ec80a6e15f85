"""Arithmetic evaluator with a closed grammar.

The grammar admits decimal numbers, unary minus, the four binary
operators, and parentheses. Nothing else tokenizes, so there are no
identifiers, no calls, and no path to any general-purpose evaluator.
Input is parsed to a small AST by recursive descent, then the AST is
evaluated; both steps reject anything outside the grammar.

Positions in errors are zero-based character offsets into the input.
"""

from __future__ import annotations

from dataclasses import dataclass

MAX_EXPRESSION_LENGTH = 256


class CalculatorError(ValueError):
    pass


class CalculatorSyntaxError(CalculatorError):
    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} (position {position})")
        self.position = position


class CalculatorDomainError(CalculatorError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Node"
    right: "Node"


Node = Num | Neg | Bin


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def _skip_spaces(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def _peek(self) -> str | None:
        self._skip_spaces()
        if self.pos < len(self.text):
            return self.text[self.pos]
        return None

    def parse(self) -> Node:
        node = self._expr()
        if self._peek() is not None:
            raise CalculatorSyntaxError(
                f"unexpected character {self.text[self.pos]!r}", self.pos
            )
        return node

    def _expr(self) -> Node:
        node = self._term()
        while self._peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            node = Bin(op=op, left=node, right=self._term())
        return node

    def _term(self) -> Node:
        node = self._unary()
        while self._peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            node = Bin(op=op, left=node, right=self._unary())
        return node

    def _unary(self) -> Node:
        if self._peek() == "-":
            self.pos += 1
            return Neg(operand=self._unary())
        return self._primary()

    def _primary(self) -> Node:
        char = self._peek()
        if char == "(":
            open_pos = self.pos
            self.pos += 1
            node = self._expr()
            if self._peek() != ")":
                raise CalculatorSyntaxError("unclosed parenthesis", open_pos)
            self.pos += 1
            return node
        if char is not None and (char.isdigit() or char == "."):
            return self._number()
        if char is None:
            raise CalculatorSyntaxError("unexpected end of expression", self.pos)
        raise CalculatorSyntaxError(f"unexpected character {char!r}", self.pos)

    def _number(self) -> Num:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos < len(self.text) and self.text[self.pos] == ".":
            self.pos += 1
            digits_after = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if self.pos == digits_after and self.pos - start == 1:
                raise CalculatorSyntaxError("lone decimal point", start)
        raw = self.text[start : self.pos]
        try:
            return Num(value=float(raw))
        except ValueError:
            raise CalculatorSyntaxError(f"bad number {raw!r}", start) from None


def _evaluate(node: Node) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg):
        return -_evaluate(node.operand)
    left = _evaluate(node.left)
    right = _evaluate(node.right)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    try:
        return left / right
    except ZeroDivisionError:
        raise CalculatorDomainError("division by zero") from None


def parse_expression(text: str) -> Node:
    if len(text) > MAX_EXPRESSION_LENGTH:
        raise CalculatorSyntaxError(
            f"expression too long ({len(text)} > {MAX_EXPRESSION_LENGTH} characters)",
            MAX_EXPRESSION_LENGTH,
        )
    if not text.strip():
        raise CalculatorSyntaxError("empty expression", 0)
    return _Parser(text).parse()


def eval_expression(text: str) -> float:
    """Parse and evaluate one arithmetic expression.

    Raises CalculatorSyntaxError for anything outside the grammar and
    CalculatorDomainError for division by zero.
    """
    return _evaluate(parse_expression(text))
