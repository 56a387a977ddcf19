"""Expression trees for symbolic regression.

Trees are stored as a flat pre-order tuple of :class:`Node` objects. A node's
subtree is the contiguous range ``nodes[i:i + length[i]]``; this keeps
crossover and subtree replacement down to list splicing.

Every parameter-carrying leaf owns one slot in the parameter vector. Slots are
numbered in pre-order, so the slots of any subtree form a contiguous range.
Variables always carry a multiplicative coefficient and count as a single node.
Coefficient-free ("bare") variables exist only for hand-written expressions.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

BINARY = ("add", "mul", "div", "aq")
UNARY = ("log", "exp", "sin", "cos", "tanh", "square", "sqrt", "cbrt")
NARY = ("add", "mul")  # may take 2 or 3 children

SYMBOLS = {"add": "+", "mul": "*", "div": "/"}
FUNC_NAMES = {
    "aq": "aq",
    "log": "logabs",
    "exp": "exp",
    "sin": "sin",
    "cos": "cos",
    "tanh": "tanh",
    "square": "square",
    "sqrt": "sqrtabs",
    "cbrt": "cbrt",
}


class ContractError(ValueError):
    """Raised when an operation's preconditions are violated."""


@dataclass(frozen=True, slots=True)
class Node:
    """A single tree node.

    ``kind`` is an operator name, ``"var"`` or ``"const"``. For variables
    ``var`` is the dataset column and ``value`` the coefficient (``None`` for a
    bare variable). For constants ``value`` is the constant itself.
    """

    kind: str
    arity: int = 0
    var: int = -1
    value: float | None = None

    @property
    def has_slot(self) -> bool:
        return self.kind == "const" or (self.kind == "var" and self.value is not None)

    @property
    def is_leaf(self) -> bool:
        return self.arity == 0


def var(index: int, coeff: float | None = 1.0) -> Node:
    return Node("var", 0, index, None if coeff is None else float(coeff))


def const(value: float) -> Node:
    return Node("const", 0, -1, float(value))


def op(kind: str, arity: int | None = None) -> Node:
    if arity is None:
        arity = 1 if kind in UNARY else 2
    if kind in UNARY and arity != 1:
        raise ContractError(f"{kind} is unary")
    if kind in ("div", "aq") and arity != 2:
        raise ContractError(f"{kind} is binary")
    if kind in NARY and arity not in (2, 3):
        raise ContractError(f"{kind} takes 2 or 3 children, got {arity}")
    if kind not in UNARY and kind not in BINARY:
        raise ContractError(f"unknown operator {kind!r}")
    return Node(kind, arity)


@dataclass(frozen=True)
class FunctionSet:
    name: str
    functions: tuple[str, ...]

    def __post_init__(self):
        if not self.functions:
            raise ContractError("function set is empty")
        unknown = set(self.functions) - set(BINARY) - set(UNARY)
        if unknown:
            raise ContractError(f"unknown functions {sorted(unknown)}")

    @property
    def binary(self) -> tuple[str, ...]:
        return tuple(f for f in self.functions if f in BINARY)

    @property
    def unary(self) -> tuple[str, ...]:
        return tuple(f for f in self.functions if f in UNARY)


SMALL = FunctionSet("Small", ("add", "mul", "div"))
LARGE = FunctionSet("Large", ("add", "mul", "div", "log", "exp", "aq", "sin", "cos", "tanh", "square", "sqrt", "cbrt"))
FUNCTION_SETS = {"small": SMALL, "large": LARGE}


def get_function_set(name: str | FunctionSet) -> FunctionSet:
    if isinstance(name, FunctionSet):
        return name
    try:
        return FUNCTION_SETS[name.lower()]
    except KeyError:
        raise ContractError(f"unknown function set {name!r}; expected one of {sorted(FUNCTION_SETS)}") from None


class ExprTree:
    """Immutable expression tree in pre-order layout."""

    __slots__ = ("nodes", "__dict__")

    def __init__(self, nodes: Iterable[Node]):
        self.nodes: tuple[Node, ...] = tuple(nodes)
        if not self.nodes:
            raise ContractError("empty tree")
        # validates structure as a side effect
        if self.lengths[0] != len(self.nodes):
            raise ContractError("node list does not form a single tree")

    def __len__(self):
        return len(self.nodes)

    def __eq__(self, other):
        return isinstance(other, ExprTree) and self.nodes == other.nodes

    def __hash__(self):
        return hash(self.nodes)

    def __repr__(self):
        return f"ExprTree({to_infix(self)!r})"

    @cached_property
    def lengths(self) -> tuple[int, ...]:
        """Subtree length of every node."""
        lengths = [0] * len(self.nodes)
        stack: list[int] = []
        for i in range(len(self.nodes) - 1, -1, -1):
            node = self.nodes[i]
            if len(stack) < node.arity:
                raise ContractError("malformed pre-order node list")
            total = 1
            for _ in range(node.arity):
                total += stack.pop()
            lengths[i] = total
            stack.append(total)
        if len(stack) != 1:
            raise ContractError("node list does not form a single tree")
        return tuple(lengths)

    @cached_property
    def slots(self) -> tuple[int, ...]:
        """Slot index per node, -1 for nodes without a parameter."""
        out, k = [], 0
        for node in self.nodes:
            if node.has_slot:
                out.append(k)
                k += 1
            else:
                out.append(-1)
        return tuple(out)

    @cached_property
    def k(self) -> int:
        return sum(1 for n in self.nodes if n.has_slot)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @cached_property
    def max_var(self) -> int:
        return max((n.var for n in self.nodes if n.kind == "var"), default=-1)

    def children(self, i: int) -> list[int]:
        """Indices of the children of node ``i``."""
        out = []
        j = i + 1
        for _ in range(self.nodes[i].arity):
            out.append(j)
            j += self.lengths[j]
        return out

    def subtree(self, i: int) -> tuple[Node, ...]:
        return self.nodes[i:i + self.lengths[i]]

    def replace_subtree(self, i: int, new: Sequence[Node]) -> "ExprTree":
        return ExprTree(self.nodes[:i] + tuple(new) + self.nodes[i + self.lengths[i]:])


def tree_size(tree: ExprTree) -> int:
    """Node count; a variable with its coefficient is one node."""
    return tree.size


def extract_parameters(tree: ExprTree) -> np.ndarray:
    return np.array([n.value for n in tree.nodes if n.has_slot], dtype=float)


def inject_parameters(tree: ExprTree, theta) -> ExprTree:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (tree.k,):
        raise ContractError(f"expected {tree.k} parameters, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ContractError("cannot inject non-finite parameters")
    nodes = list(tree.nodes)
    for i, slot in enumerate(tree.slots):
        if slot >= 0:
            nodes[i] = replace(nodes[i], value=float(theta[slot]))
    return ExprTree(nodes)


def _check_inputs(tree: ExprTree, theta, X) -> tuple[np.ndarray, np.ndarray]:
    theta = np.asarray(theta, dtype=float)
    X = np.asarray(X, dtype=float)
    if theta.shape != (tree.k,):
        raise ContractError(f"expected {tree.k} parameters, got shape {theta.shape}")
    if X.ndim != 2:
        raise ContractError(f"X must be 2-d, got shape {X.shape}")
    if X.shape[1] <= tree.max_var:
        raise ContractError(f"tree uses column {tree.max_var} but X has {X.shape[1]} columns")
    return theta, X


def _apply_unary(kind: str, a: np.ndarray) -> np.ndarray:
    if kind == "log":
        return np.log(np.abs(a))
    if kind == "exp":
        return np.exp(a)
    if kind == "sin":
        return np.sin(a)
    if kind == "cos":
        return np.cos(a)
    if kind == "tanh":
        return np.tanh(a)
    if kind == "square":
        return a * a
    if kind == "sqrt":
        return np.sqrt(np.abs(a))
    if kind == "cbrt":
        return np.cbrt(a)
    raise ContractError(f"unknown unary {kind!r}")


def evaluate(tree: ExprTree, theta, X) -> np.ndarray:
    """Evaluate ``tree`` row-wise on ``X`` with parameters ``theta``.

    Division is unprotected; non-finite values propagate.
    """
    theta, X = _check_inputs(tree, theta, X)
    n = X.shape[0]
    stack: list[np.ndarray] = []
    nodes, slots = tree.nodes, tree.slots
    with np.errstate(all="ignore"):
        for i in range(len(nodes) - 1, -1, -1):
            node = nodes[i]
            kind = node.kind
            if kind == "var":
                col = X[:, node.var]
                stack.append(col * theta[slots[i]] if slots[i] >= 0 else col.copy())
            elif kind == "const":
                stack.append(np.full(n, theta[slots[i]]))
            elif node.arity == 1:
                stack.append(_apply_unary(kind, stack.pop()))
            else:
                args = [stack.pop() for _ in range(node.arity)]
                if kind == "add":
                    out = args[0] + args[1]
                    for a in args[2:]:
                        out = out + a
                elif kind == "mul":
                    out = args[0] * args[1]
                    for a in args[2:]:
                        out = out * a
                elif kind == "div":
                    out = args[0] / args[1]
                else:  # aq
                    out = args[0] / np.sqrt(1.0 + args[1] * args[1])
                stack.append(out)
    return stack[0]


def residuals(tree: ExprTree, theta, X, y) -> np.ndarray:
    """``y - f(X, theta)``."""
    y = np.asarray(y, dtype=float)
    pred = evaluate(tree, theta, X)
    if y.shape != pred.shape:
        raise ContractError(f"target shape {y.shape} does not match {pred.shape}")
    return y - pred


# ----------------------------------------------------------------------------
# infix text
#
# Weighted variables are written as a coefficient juxtaposed with the
# variable name ("1.5 X"); a bare name is a coefficient-free variable; any
# other number is a constant. Every operator node is parenthesised so that
# n-ary nodes survive a round trip.


def _fmt(x: float) -> str:
    return repr(float(x))


def to_infix(tree: ExprTree, names: Sequence[str] | None = None) -> str:
    def name(i):
        return names[i] if names is not None else f"X{i + 1}"

    def rec(i: int) -> str:
        node = tree.nodes[i]
        if node.kind == "var":
            return name(node.var) if node.value is None else f"{_fmt(node.value)} {name(node.var)}"
        if node.kind == "const":
            return _fmt(node.value)
        args = [rec(c) for c in tree.children(i)]
        if node.kind in SYMBOLS:
            return "(" + f" {SYMBOLS[node.kind]} ".join(args) + ")"
        return f"{FUNC_NAMES[node.kind]}(" + ", ".join(args) + ")"

    return rec(0)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<sym>[-+*/(),]))"
)
_FUNCS = {v: k for k, v in FUNC_NAMES.items()}


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ContractError(f"cannot parse expression at position {pos}: {text[pos:pos + 12]!r}")
        pos = m.end()
        for kind in ("num", "name", "sym"):
            if m.group(kind) is not None:
                tokens.append((kind, m.group(kind)))
                break
    return tokens


def parse_infix(text: str, names: Sequence[str] | None = None) -> ExprTree:
    """Parse the output of :func:`to_infix` (or hand-written text in the same grammar).

    ``names`` maps variable names to column indices; without it ``X1..Xd``
    are accepted.
    """
    tokens = _tokenize(text)
    pos = 0
    lookup = {n: i for i, n in enumerate(names)} if names is not None else None

    def col(name: str) -> int:
        if lookup is not None:
            if name not in lookup:
                raise ContractError(f"unknown variable {name!r}")
            return lookup[name]
        m = re.fullmatch(r"[Xx](\d+)", name)
        if not m or int(m.group(1)) < 1:
            raise ContractError(f"unknown variable {name!r}")
        return int(m.group(1)) - 1

    def peek():
        return tokens[pos] if pos < len(tokens) else (None, None)

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok[0] is None or (expected is not None and tok[1] != expected):
            raise ContractError(f"expected {expected or 'token'} in {text!r}")
        pos += 1
        return tok

    def node(kind, children):
        return [op(kind, len(children))] + [n for c in children for n in c]

    def chain(items, ops_):
        # runs of the same n-ary operator collapse into one node; '/' is left-associative
        out = items[0]
        run_op, run = None, [out]
        for o, item in zip(ops_, items[1:]):
            if o in ("+", "*") and o == run_op and len(run) < 3:
                run.append(item)
                continue
            if run_op is not None:
                out = node("add" if run_op == "+" else "mul", run)
            if o == "/":
                out = node("div", [out, item])
                run_op, run = None, [out]
            else:
                run_op, run = o, [out, item]
        if run_op is not None:
            out = node("add" if run_op == "+" else "mul", run)
        return out

    def expr():
        items, ops_ = [term()], []
        while peek() == ("sym", "+"):
            take()
            ops_.append("+")
            items.append(term())
        return chain(items, ops_)

    def term():
        items, ops_ = [atom()], []
        while peek()[1] in ("*", "/") and peek()[0] == "sym":
            ops_.append(take()[1])
            items.append(atom())
        if "/" in ops_ and "*" in ops_:
            # mixed products: fold strictly left to right
            out = items[0]
            for o, item in zip(ops_, items[1:]):
                out = node("div" if o == "/" else "mul", [out, item])
            return out
        return chain(items, ops_)

    def atom():
        kind, tok = take()
        sign = 1.0
        if tok in ("-", "+") and peek()[0] == "num":
            sign = -1.0 if tok == "-" else 1.0
            kind, tok = take()
        if kind == "num":
            value = sign * float(tok)
            if peek()[0] == "name" and peek()[1] not in _FUNCS:
                return [var(col(take()[1]), value)]
            return [const(value)]
        if kind == "name":
            if tok in _FUNCS:
                take("(")
                args = [expr()]
                while peek() == ("sym", ","):
                    take()
                    args.append(expr())
                take(")")
                return node(_FUNCS[tok], args)
            return [var(col(tok), None)]
        if tok == "(":
            inner = expr()
            take(")")
            return inner
        raise ContractError(f"unexpected {tok!r} in {text!r}")

    nodes = expr()
    if pos != len(tokens):
        raise ContractError(f"trailing input in {text!r}")
    return ExprTree(nodes)


# ----------------------------------------------------------------------------
# hand-built trees

ORIGINAL_TEXT = (
    "(c0 + (c1 * ((c2 Y * c3 Y) / (((c4 / (c5 X * c6 X)) * c7) + (c8 Y * c9 Y)))))"
)
SIMPLIFIED_TEXT = "(c0 + ((c1 * Y * Y) / ((c2 * Y * Y) + (c3 / (X * X)))))"
FIXED_TEXT = "(c0 + ((c1 * Y * Y) / ((Y * Y) + (c2 / (X * X)))))"


def _fill(template: str, values: Sequence[float]) -> str:
    return re.sub(r"c(\d+)", lambda m: _fmt(values[int(m.group(1))]), template)


def build_case_study_trees() -> dict[str, ExprTree]:
    """The over-parameterised Pagie solution and its two algebraic rewrites.

    Variables are named ``X`` and ``Y`` (columns 0 and 1). ``original`` has
    ten parameters, ``simplified`` four and ``fixed`` three; all three share
    the same three effective degrees of freedom. Initial values are rough
    but put each model near the region of its fit.
    """
    names = ("X", "Y")
    original = [0.9, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]
    simplified = [2.0, -2.0, 1.0, 1.0]
    fixed = [2.0, -2.0, 1.0]
    return {
        "original": parse_infix(_fill(ORIGINAL_TEXT, original), names),
        "simplified": parse_infix(_fill(SIMPLIFIED_TEXT, simplified), names),
        "fixed": parse_infix(_fill(FIXED_TEXT, fixed), names),
    }


def toy_tree() -> ExprTree:
    """``c1 x1 * c2 x2 + c3``: two weighted variables with a shared scale."""
    return ExprTree([op("add"), op("mul"), var(0, 2.0), var(1, 3.0), const(1.0)])


def is_closed(tree: ExprTree, fset: FunctionSet) -> bool:
    """True when every operator in ``tree`` belongs to ``fset``."""
    allowed = set(fset.functions)
    return all(n.is_leaf or n.kind in allowed for n in tree.nodes)


def finite_or(value: float, default: float) -> float:
    return value if math.isfinite(value) else default
