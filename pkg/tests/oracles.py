"""Independent reference implementations used only by the tests."""

import numpy as np


def jacobi_eigh(A, sweeps=100, tol=1e-15):
    """Cyclic Jacobi rotations on a symmetric matrix.

    Returns eigenvalues (descending) and matching column eigenvectors.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J
    vals = np.diag(A).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], V[:, order]


def entropy_objective(a, s, tau):
    a = np.asarray(a, dtype=float)
    n = a.size
    safe = np.where(a > 0, a, 1.0)
    return float(a @ s / n - tau * np.sum(a * np.log(safe)))


def project_simplex(v):
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, v.size + 1) > css - 1.0)[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def entropy_argmax_pg(s, tau, iters=500, tol=1e-12):
    """Maximise the entropy-regularised linear objective by projected gradient ascent.

    Step sizes start from a Barzilai-Borwein guess and are halved until the
    step increases the objective and no entry loses more than half its mass
    (the log barrier makes larger drops overshoot). Stops once the gradient
    is constant across entries up to ``tol``, scaled by the entry mass, or
    after ``iters`` steps; a few Newton steps then remove what is left of the
    ill-conditioned tail.
    """
    s = np.asarray(s, dtype=float)
    n = s.size

    def grad(a):
        return s / n - tau * (np.log(a) + 1.0)

    a = np.full(n, 1.0 / n)
    g = grad(a)
    f = entropy_objective(a, s, tau)
    t = 1.0
    for _ in range(iters):
        if np.max(a * np.abs(g - g.mean())) < tol:
            break
        stalled = False
        while True:
            nxt = project_simplex(a + t * g)
            if (nxt >= 0.5 * a).all():
                f_new = entropy_objective(nxt, s, tau)
                if f_new >= f:
                    break
            t *= 0.5
            if t < 1e-30:
                # no ascent step left at working precision
                stalled = True
                break
        if stalled:
            break
        diff = nxt - a
        g_new = grad(nxt)
        dg = g_new - g
        # Barzilai-Borwein guess; for a concave objective diff @ dg < 0
        t = float(-(diff @ diff) / (diff @ dg)) if diff @ dg < 0 else 2.0 * t
        a, g, f = nxt, g_new, f_new
    return _newton_polish(a, s, tau)


def _newton_polish(a, s, tau, steps=50):
    """Newton steps restricted to the hyperplane ``Σ a = 1``.

    The Hessian is diagonal ``-tau / a_i``, so the constrained step is
    ``d = a (g - aᵀg) / tau``; it is damped to keep every entry positive.
    """
    n = s.size
    for _ in range(steps):
        g = s / n - tau * (np.log(a) + 1.0)
        d = a * (g - a @ g) / tau
        shrink = d < 0
        step = 1.0
        if shrink.any():
            step = min(1.0, 0.9 * float(np.min(-a[shrink] / d[shrink])))
        a = a + step * d
        a = a / a.sum()
        if np.abs(d).max() < 1e-16:
            break
    return a


def grid_argmax(s, tau, steps=400):
    """Brute-force grid search on the 2- or 3-simplex."""
    s = np.asarray(s, dtype=float)
    best, best_a = -np.inf, None
    if s.size == 2:
        for i in range(1, steps):
            a = np.array([i / steps, 1 - i / steps])
            f = entropy_objective(a, s, tau)
            if f > best:
                best, best_a = f, a
    else:
        for i in range(1, steps):
            for j in range(1, steps - i):
                a = np.array([i, j, steps - i - j]) / steps
                f = entropy_objective(a, s, tau)
                if f > best:
                    best, best_a = f, a
    return best_a, best


def l1_grid_direction(Xc, steps=20000):
    """Angular grid search for ``max Σ|pᵀx|`` over unit vectors in 2-D."""
    theta = np.linspace(0.0, np.pi, steps, endpoint=False)
    P = np.vstack([np.cos(theta), np.sin(theta)])
    vals = np.abs(P.T @ Xc).sum(axis=1)
    i = int(np.argmax(vals))
    return P[:, i], float(vals[i])


def projector(P):
    P = np.asarray(P, dtype=float)
    return P @ P.T
