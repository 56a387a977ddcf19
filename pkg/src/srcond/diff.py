"""Forward-mode derivatives of an expression tree with respect to its parameters.

Slots are numbered in pre-order, so the parameters of any subtree occupy a
contiguous range of rows in a ``k x n`` derivative buffer. Leaves seed their
row; every operator scales the rows of each child's range by the partial
derivative with respect to that child.
"""
from __future__ import annotations

import numpy as np

from .expr import ContractError, ExprTree, _check_inputs


def _unary(kind: str, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Value and first derivative of a unary function."""
    if kind == "log":
        return np.log(np.abs(a)), 1.0 / a
    if kind == "exp":
        e = np.exp(a)
        return e, e
    if kind == "sin":
        return np.sin(a), np.cos(a)
    if kind == "cos":
        return np.cos(a), -np.sin(a)
    if kind == "tanh":
        t = np.tanh(a)
        return t, 1.0 - t * t
    if kind == "square":
        return a * a, 2.0 * a
    if kind == "sqrt":
        s = np.sqrt(np.abs(a))
        return s, np.sign(a) / (2.0 * s)
    if kind == "cbrt":
        c = np.cbrt(a)
        return c, 1.0 / (3.0 * c * c)
    raise ContractError(f"unknown unary {kind!r}")


def evaluate_with_jacobian(tree: ExprTree, theta, X) -> tuple[np.ndarray, np.ndarray]:
    """Return ``f(X, theta)`` and ``df/dtheta`` (shape ``n x k``)."""
    theta, X = _check_inputs(tree, theta, X)
    n = X.shape[0]
    nodes, slots = tree.nodes, tree.slots
    # row j of G holds d(subtree)/d(theta_j) for the subtree currently owning slot j;
    # the chain rule is applied by scaling a subtree's rows in place
    G = np.zeros((tree.k, n))
    stack: list[tuple[np.ndarray, int, int]] = []  # value, first slot, end slot
    with np.errstate(all="ignore"):
        for i in range(len(nodes) - 1, -1, -1):
            node = nodes[i]
            kind = node.kind
            slot = slots[i]
            if kind == "var":
                col = X[:, node.var]
                if slot >= 0:
                    G[slot] = col
                    stack.append((col * theta[slot], slot, slot + 1))
                else:
                    stack.append((col, 0, 0))
            elif kind == "const":
                G[slot] = 1.0
                stack.append((np.full(n, theta[slot]), slot, slot + 1))
            elif node.arity == 1:
                a, lo, hi = stack.pop()
                v, dv = _unary(kind, a)
                if hi > lo:
                    G[lo:hi] *= dv
                stack.append((v, lo, hi))
            else:
                args = [stack.pop() for _ in range(node.arity)]
                if kind == "add":
                    v = args[0][0] + args[1][0]
                    for a, _, _ in args[2:]:
                        v = v + a
                elif kind == "mul":
                    vals = [a for a, _, _ in args]
                    v = vals[0] * vals[1]
                    for a in vals[2:]:
                        v = v * a
                    for j, (_, lo, hi) in enumerate(args):
                        if hi == lo:
                            continue
                        # product of the other factors, not v / vals[j]: factors may be zero
                        others = None
                        for m, a in enumerate(vals):
                            if m != j:
                                others = a if others is None else others * a
                        G[lo:hi] *= others
                elif kind == "div":
                    (a, alo, ahi), (b, blo, bhi) = args
                    v = a / b
                    if ahi > alo:
                        G[alo:ahi] /= b
                    if bhi > blo:
                        G[blo:bhi] *= -a / (b * b)
                else:  # aq
                    (a, alo, ahi), (b, blo, bhi) = args
                    q = 1.0 + b * b
                    s = np.sqrt(q)
                    v = a / s
                    if ahi > alo:
                        G[alo:ahi] /= s
                    if bhi > blo:
                        G[blo:bhi] *= -a * b / (q * s)
                his = [hi for _, lo, hi in args if hi > lo]
                los = [lo for _, lo, hi in args if hi > lo]
                stack.append((v, min(los), max(his)) if his else (v, 0, 0))
    # copy: a bare-variable root would otherwise alias X
    return np.array(stack[0][0]), G.T


def jacobian(tree: ExprTree, theta, X, y=None) -> np.ndarray:
    """Jacobian of the residual ``y - f(X, theta)``, i.e. ``-df/dtheta``.

    Non-finite entries are left in place; callers check ``np.isfinite``.
    ``y`` only contributes a shape check.
    """
    _, grad = evaluate_with_jacobian(tree, theta, X)
    if y is not None and np.shape(y) != (grad.shape[0],):
        raise ContractError(f"target shape {np.shape(y)} does not match {grad.shape[0]} rows")
    return -grad


def residuals_and_jacobian(tree: ExprTree, theta, X, y) -> tuple[np.ndarray, np.ndarray]:
    value, grad = evaluate_with_jacobian(tree, theta, X)
    y = np.asarray(y, dtype=float)
    if y.shape != value.shape:
        raise ContractError(f"target shape {y.shape} does not match {value.shape}")
    return y - value, -grad
