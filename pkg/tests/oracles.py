"""Brute-force references for the test suite.

Nothing here imports the evaluation, differentiation, SVD or optimisation
code under test: trees are read only through their public node list.
"""
from __future__ import annotations

import math

import numpy as np


def _scalar(kind, args):
    if kind == "add":
        return sum(args)
    if kind == "mul":
        out = 1.0
        for a in args:
            out *= a
        return out
    if kind == "div":
        return args[0] / args[1]
    if kind == "aq":
        return args[0] / math.sqrt(1.0 + args[1] ** 2)
    (a,) = args
    return {
        "log": lambda: math.log(abs(a)),
        "exp": lambda: math.exp(a),
        "sin": lambda: math.sin(a),
        "cos": lambda: math.cos(a),
        "tanh": lambda: math.tanh(a),
        "square": lambda: a * a,
        "sqrt": lambda: math.sqrt(abs(a)),
        "cbrt": lambda: math.copysign(abs(a) ** (1.0 / 3.0), a),
    }[kind]()


def scalar_eval(nodes, theta, row) -> float:
    """Recursive evaluation of one data row straight from the pre-order nodes."""
    pos = 0
    slot = 0

    def rec():
        nonlocal pos, slot
        node = nodes[pos]
        pos += 1
        if node.kind == "var":
            if node.value is None:
                return float(row[node.var])
            v = theta[slot] * row[node.var]
            slot += 1
            return v
        if node.kind == "const":
            v = theta[slot]
            slot += 1
            return v
        args = [rec() for _ in range(node.arity)]
        return _scalar(node.kind, args)

    return rec()


def scalar_residuals(tree, theta, X, y) -> np.ndarray:
    return np.array([y[i] - scalar_eval(tree.nodes, theta, X[i]) for i in range(len(y))])


def scalar_ssr(tree, theta, X, y) -> float:
    total = 0.0
    for i in range(len(y)):
        e = y[i] - scalar_eval(tree.nodes, theta, X[i])
        total += e * e
    return total


def fd_jacobian(tree, theta, X, y, h=None, richardson=False) -> np.ndarray:
    """Central differences of the residual vector.

    ``h`` defaults to ``eps**(1/3) * max(1, |theta_j|)`` per column. With
    ``richardson`` the steps ``h`` and ``h/2`` are combined to cancel the
    ``h**2`` error term; ``h`` then defaults to ``3e-5 * max(1, |theta_j|)``.
    """
    theta = np.asarray(theta, dtype=float)
    if h is not None and np.any(np.asarray(h) <= 0):
        raise ValueError("h must be positive")
    if richardson:
        if h is None:
            h = np.array([3e-5 * max(1.0, abs(t)) for t in theta])
        coarse = fd_jacobian(tree, theta, X, y, h)
        fine = fd_jacobian(tree, theta, X, y, np.asarray(h) / 2)
        return (4.0 * fine - coarse) / 3.0
    k = len(theta)
    J = np.zeros((len(y), k))
    for j in range(k):
        if h is None:
            step = np.finfo(float).eps ** (1 / 3) * max(1.0, abs(theta[j]))
        else:
            step = float(np.broadcast_to(h, (k,))[j])
        up, down = theta.copy(), theta.copy()
        up[j] += step
        down[j] -= step
        J[:, j] = (scalar_residuals(tree, up, X, y) - scalar_residuals(tree, down, X, y)) / (2 * step)
    return J


def jacobi_eigenvalues(A: np.ndarray, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """Cyclic Jacobi eigenvalue iteration for a symmetric matrix."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    for _ in range(max_sweeps):
        off = math.sqrt(sum(A[p, q] ** 2 for p in range(n) for q in range(n) if p != q))
        if off <= tol * max(1.0, float(np.linalg.norm(np.diag(A)))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for r in range(n):
                    arp, arq = A[r, p], A[r, q]
                    A[r, p] = c * arp - s * arq
                    A[r, q] = s * arp + c * arq
                for r in range(n):
                    apr, aqr = A[p, r], A[q, r]
                    A[p, r] = c * apr - s * aqr
                    A[q, r] = s * apr + c * aqr
    return np.array([A[i, i] for i in range(n)])


def eig_jtj(J: np.ndarray) -> np.ndarray:
    """Singular values as square roots of the eigenvalues of ``J^T J``, descending."""
    J = np.asarray(J, dtype=float)
    k = J.shape[1]
    JtJ = [[sum(J[i, a] * J[i, b] for i in range(J.shape[0])) for b in range(k)] for a in range(k)]
    ev = jacobi_eigenvalues(np.array(JtJ))
    return np.sort(np.sqrt(np.clip(ev, 0.0, None)))[::-1]


def normal_equations_ls(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Least-squares solution from ``A^T A x = A^T b`` by Gaussian elimination."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    M = A.T @ A
    v = A.T @ b
    n = len(v)
    aug = np.column_stack([M, v])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[piv, col]) < 1e-300:
            raise np.linalg.LinAlgError("A^T A is singular")
        aug[[col, piv]] = aug[[piv, col]]
        for r in range(col + 1, n):
            aug[r] -= aug[r, col] / aug[col, col] * aug[col]
    x = np.zeros(n)
    for r in range(n - 1, -1, -1):
        x[r] = (aug[r, -1] - aug[r, r + 1:n] @ x[r + 1:]) / aug[r, r]
    return x


def count_nodes(nodes) -> int:
    """Node count by explicit recursive traversal."""
    pos = 0

    def rec():
        nonlocal pos
        node = nodes[pos]
        pos += 1
        return 1 + sum(rec() for _ in range(node.arity))

    total = rec()
    assert pos == len(nodes)
    return total
