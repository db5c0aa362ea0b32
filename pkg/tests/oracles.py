"""Slow reference implementations written directly from the definitions.

Plain Python loops over points, no vectorization and no shared code with
the package, so agreement with the package is a genuine cross-check.
"""
import math


def norm(u, v):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(u, v)))


def rho_q(u, v, q):
    return norm(u, v) ** q


def dist_kernel(u, v, q, z0, scale=0.5):
    return scale * (rho_q(u, z0, q) + rho_q(v, z0, q) - rho_q(u, v, q))


def gauss_kernel(u, v, sigma):
    return math.exp(-sigma * norm(u, v) ** 2)


def energy(z, w, q):
    m, n = len(z), len(w)
    zw = sum(rho_q(a, b, q) for a in z for b in w) / (m * n)
    zz = sum(rho_q(a, b, q) for a in z for b in z) / (m * m)
    ww = sum(rho_q(a, b, q) for a in w for b in w) / (n * n)
    return 2 * zw - zz - ww


def mmd(z, w, k):
    m, n = len(z), len(w)
    return (
        sum(k(a, b) for a in z for b in z) / m**2
        + sum(k(a, b) for a in w for b in w) / n**2
        - 2 * sum(k(a, b) for a in z for b in w) / (m * n)
    )


def dcov(x, y, qx, qy):
    m = len(x)
    a = [[rho_q(x[i], x[j], qx) for j in range(m)] for i in range(m)]
    b = [[rho_q(y[i], y[j], qy) for j in range(m)] for i in range(m)]
    t1 = sum(a[i][j] * b[i][j] for i in range(m) for j in range(m)) / m**2
    t2 = sum(map(sum, a)) / m**2 * sum(map(sum, b)) / m**2
    t3 = sum((sum(a[i]) / m) * (sum(b[i]) / m) for i in range(m)) / m
    return t1 + t2 - 2 * t3


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def hsic(x, y, kx, ky):
    m = len(x)
    Kx = [[kx(x[i], x[j]) for j in range(m)] for i in range(m)]
    Ky = [[ky(y[i], y[j]) for j in range(m)] for i in range(m)]
    H = [[(1.0 if i == j else 0.0) - 1.0 / m for j in range(m)] for i in range(m)]
    M = matmul(matmul(matmul(Kx, H), Ky), H)
    return sum(M[i][i] for i in range(m)) / m**2
