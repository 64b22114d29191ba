"""High-precision reference values hard-coded in the C++ tests.

Each block re-derives a constant from its defining formula with mpmath at
30 digits, independently of the library. Run: python3 constants.py
"""
from mpmath import mp, mpf, power as pw, exp

mp.dps = 30


def holder(mu, a, b, g):
    p = (mu + g - 1) / (1 + g - a - b)
    return p, p / (p - 1), g / (mu - 1)


def large_time(mu, a, b, g, A, R, s1, smu):
    p, q, rho = holder(mu, a, b, g)
    Ah, s1h, smh = A / R, s1 / R, smu / R
    core = pw(pw(2, mu) * mu, p) * pw(q, 1 - p) / p
    two = pw(2, 2 + rho)
    b1 = 2 * pw(two * core * pw(Ah, p) * pw(s1h, 1 + p + rho) + two * smh * pw(s1h, rho), 1 / (1 + rho))
    b2 = 4 * (core * pw(Ah, p) * pw(s1h, 1 + p) + smh)
    return b1, b2


def smallness(mu, a, b, g, A, R, s1h, smbh):
    C = pw(2, max(mu - 2, 0)) * max(mu, mu * (mu - 1))
    nu = mu + b
    p, q, rho = holder(nu, a, b, g)
    Ah = A / R
    core = pw(pw(2, nu) * nu, p) * pw(q, 1 - p) / p
    two = pw(2, 2 + rho)
    k2 = R - 16 * C * A * (core * pw(Ah, p) * pw(s1h, 1 + p) + smbh)
    k1 = R - 8 * C * A * pw(two * core * pw(Ah, p) * pw(s1h, 1 + p + rho) + two * smbh * pw(s1h, rho), 1 / (1 + rho))
    return k1, k2, p, q, rho


def general_bound(mu, a, b, g, A, R, m1, s1, smu, t):
    p, q, rho = holder(mu, a, b, g)
    M = max(m1, s1 / R)
    xi = pw(pw(2, mu - 1) * mu, p) * pw(q, 1 - p) / (2 * p) * pw(R, 1 - p) * pw(A, p) * pw(M, 1 + p) + smu
    lam = mpf(1) / 2 * R * pw(M, -g / (mu - 1))
    return max(pw(2 * xi / lam, 1 / (1 + rho)), pw(2 / (rho * lam), 1 / rho) * pw(t, -1 / rho))


third = mpf(1) / 3
print("large-time (2, 0, 1/3, 2/3, 1, 1, 1, 1):", *large_time(mpf(2), 0, third, 2 * third, mpf(1), mpf(1), mpf(1), mpf(1)))
print("smallness brownian R*=50 mu=1.7:", *smallness(mpf("1.7"), 0, third, 2 * third, mpf(2), mpf(50),
                                                      mpf("0.01") / 50, mpf("0.01") / 50))
print("general bound mu=2 brownian m1_in=3 t=0.5:",
      general_bound(mpf(2), 0, third, 2 * third, mpf(2), mpf(1), mpf(3), mpf(1), mpf(1), mpf("0.5")))
print("li-chen C=1 k=1:", 1 + (mpf("0.084") + mpf("0.0264") * exp(mpf("-16.7"))))
