"""Independent reference implementations used only by the test suite.

These deliberately avoid the package's code paths: plain loops, one-sided
Jacobi rotations instead of LAPACK, exhaustive grids instead of SVD.
"""

import math

import numpy as np


def jacobi_svd(a, sweeps=60, tol=1e-15):
    """One-sided Jacobi SVD.  Returns singular values, descending."""
    u = np.array(a, dtype=np.float64, copy=True)
    n = u.shape[1]
    for _ in range(sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                alpha = u[:, i] @ u[:, i]
                beta = u[:, j] @ u[:, j]
                gamma = u[:, i] @ u[:, j]
                if abs(gamma) <= tol * math.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                off = max(off, abs(gamma) / math.sqrt(alpha * beta))
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                ui = u[:, i].copy()
                u[:, i] = c * ui - s * u[:, j]
                u[:, j] = s * ui + c * u[:, j]
        if off < tol:
            break
    return np.sort(np.linalg.norm(u, axis=0))[::-1]


def orthogonal_2d_grid(steps=20000):
    """Every rotation and reflection of the plane on a uniform angle grid."""
    for theta in np.linspace(0.0, 2 * math.pi, steps, endpoint=False):
        c, s = math.cos(theta), math.sin(theta)
        yield np.array([[c, -s], [s, c]])
        yield np.array([[c, s], [s, -c]])


def grid_procrustes_2d(z_l, z_m, steps=20000):
    best, best_q = np.inf, None
    for q in orthogonal_2d_grid(steps):
        r = np.linalg.norm(z_l @ q - z_m)
        if r < best:
            best, best_q = r, q
    return best_q, best


def unit_rows(z):
    z = np.asarray(z, dtype=np.float64)
    out = []
    for row in z:
        norm = math.sqrt(sum(x * x for x in row))
        out.append(row / norm if norm > 0 else row * 0.0)
    return np.array(out)


def scan_knn(z, k):
    """Full-scan cosine k-NN with ties to the lower id, self excluded."""
    u = unit_rows(z)
    out = []
    for i in range(len(u)):
        cand = [(-float(u[i] @ u[j]), j) for j in range(len(u)) if j != i]
        cand.sort()
        out.append([j for _, j in cand[:k]])
    return out


def second_order_direct(z_l, z_m, k):
    """Second-order cosine per node straight from the definition."""
    a, b = unit_rows(z_l), unit_rows(z_m)
    nl, nm = scan_knn(z_l, k), scan_knn(z_m, k)
    out = []
    for i in range(len(a)):
        union = sorted(set(nl[i]) | set(nm[i]))
        s_l = np.array([a[i] @ a[j] for j in union])
        s_m = np.array([b[i] @ b[j] for j in union])
        out.append(float(s_l @ s_m / (np.linalg.norm(s_l) * np.linalg.norm(s_m))))
    return np.array(out)


def random_orthogonal(d, rng):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))
