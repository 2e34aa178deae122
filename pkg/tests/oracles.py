"""Independent reference computations used to check the package."""
import math

import numpy as np
from scipy import integrate


def svd_cca_rho(x, y):
    """Largest canonical correlation via orthonormal bases (Bjorck-Golub)."""
    x = x - x.mean(axis=1, keepdims=True)
    y = y - y.mean(axis=1, keepdims=True)
    qx, _ = np.linalg.qr(x.T)
    qy, _ = np.linalg.qr(y.T)
    return float(np.linalg.svd(qx.T @ qy, compute_uv=False)[0])


def grid_cca_rho(x, y, n_angles=4000):
    """Exhaustive angular search for 2-row X and Y.

    For each direction of X the best Y combination is the projection of
    the X variate onto span(Y), so only one angle needs a grid; the
    maximum is then polished on the two neighbouring grid points.
    """
    x = x - x.mean(axis=1, keepdims=True)
    y = y - y.mean(axis=1, keepdims=True)
    theta = np.linspace(0.0, np.pi, n_angles, endpoint=False)

    def score(th):
        u = np.cos(th)[:, None] * x[0] + np.sin(th)[:, None] * x[1]
        beta, *_ = np.linalg.lstsq(y.T, u.T, rcond=None)
        fit = (y.T @ beta).T
        num = np.sum(u * fit, axis=1)
        return num / np.sqrt(np.sum(u * u, axis=1) * np.sum(fit * fit, axis=1))

    s = score(theta)
    k = int(np.argmax(s))
    step = np.pi / n_angles
    fine = np.linspace(theta[k] - step, theta[k] + step, 401)
    return float(max(s[k], score(fine).max()))


def t_cdf_quadrature(t, df):
    """CDF of Student's t by numerically integrating its density."""
    c = math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)) / math.sqrt(df * math.pi)

    def pdf(u):
        return c * (1 + u * u / df) ** (-(df + 1) / 2)

    val, _ = integrate.quad(pdf, 0.0, abs(t), epsabs=1e-13, epsrel=1e-13)
    return 0.5 + math.copysign(val, t)


def ttest_oracle(a, b):
    d = np.asarray(a, float) - np.asarray(b, float)
    n = d.size
    mean = sum(d) / n
    var = sum((v - mean) ** 2 for v in d) / (n - 1)
    t = mean / math.sqrt(var / n)
    return t, 2 * (1 - t_cdf_quadrature(abs(t), n - 1))
