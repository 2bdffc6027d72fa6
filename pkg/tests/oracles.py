"""Independent high-precision reference implementations (mpmath)."""
import mpmath as mp

mp.mp.dps = 40


def lower_gamma(n, x):
    return mp.gammainc(n, 0, mp.mpf(x), regularized=True)


def weights(s, lam, x, nmax=100):
    """W_0..W_nmax by the direct sum, with exact-precision incomplete gammas."""
    s, lam, x = mp.mpf(s), mp.mpf(lam), mp.mpf(x)
    raw = [s * lam**n / mp.factorial(n) * lower_gamma(n, x) for n in range(1, nmax + 1)]
    w0 = 1 / (1 + mp.fsum(raw))
    return [w0] + [w0 * r for r in raw]


def moments(s, lam, x, nmax=100):
    """(W0, mean, variance, fano, R) as floats."""
    w = weights(s, lam, x, nmax)
    m1 = mp.fsum(n * wn for n, wn in enumerate(w))
    m2 = mp.fsum(n * n * wn for n, wn in enumerate(w))
    var = m2 - m1 * m1
    fano = var / m1
    return tuple(float(v) for v in (w[0], m1, var, fano, (fano - 1) / m1))


def nmax_for(lam, x):
    m = max(lam, x)
    return int(m + 12 * m**0.5 + 60)
