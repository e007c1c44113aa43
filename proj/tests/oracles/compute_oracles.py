"""Independent reference values frozen into the C++ test suites.

Run with `python3 tests/oracles/compute_oracles.py`. Nothing here imports or
calls the C++ library; every value is recomputed from the defining formulas
with mpmath at 50 digits.
"""
import mpmath as mp

mp.mp.dps = 50


def cubic_root(tau, x):
    """Bisection on tau*y^3 + y - x = 0 over [min(0,x), max(0,x)]."""
    lo, hi = min(mp.mpf(0), x), max(mp.mpf(0), x)
    f = lambda y: tau * y**3 + y - x
    for _ in range(400):
        mid = (lo + hi) / 2
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


def quartic_coordinate_moment(k):
    num = mp.quad(lambda y: y**k * mp.e**(-y**4 / 4), [-mp.inf, 0, mp.inf])
    den = mp.quad(lambda y: mp.e**(-y**4 / 4), [-mp.inf, 0, mp.inf])
    return num / den


def quartic_norm_moment(d, m):
    c2, c4, c6 = (quartic_coordinate_moment(k) for k in (2, 4, 6))
    if m == 2:
        return d * c2
    if m == 4:
        return d * c4 + d * (d - 1) * c2**2
    if m == 6:
        return d * c6 + 3 * d * (d - 1) * c4 * c2 + d * (d - 1) * (d - 2) * c2**3
    raise ValueError(m)


# --- moment-bound constants, transcribed directly from the closed forms ----

def noise_constant(m):
    m = mp.mpf(m)
    if m >= 2:
        return 4 ** (m / 2) * mp.gamma((1 + m) / 2) / mp.gamma(mp.mpf(1) / 2)
    return mp.mpf(2) ** (m / 2)


def taylor_constant(m):
    m = mp.mpf(m)
    return m**2 * 2**m


def moment_bound(p, m):
    d, kap, lam, R = p["d"], p["kappa"], p["lambda_v"], p["r_v"]
    delta = kap * p["tau"] ** (1 + p["alpha"])
    ex0sq = p["x0_norm"] ** 2
    m = mp.mpf(m)
    if m <= 2:
        inner = (36 * kap**2 / d + lam**2 / d * ex0sq
                 + (16 * kap * delta + 4 * R**2 * lam + 4 * delta * R * lam + 8 * d) / d * lam)
        return inner ** (m / 2)
    F = mp.floor(m)
    a = m - F
    c = taylor_constant(m)
    A0 = p["x0_norm"] ** m
    Fm1 = mp.floor(m - 1)
    Fm2 = mp.floor(m - 2)
    bracket = (2**F * c**F * kap**F * d ** (-F / 2)
               + Fm1 * 2 * c * (2 * kap * delta + 4 * d) / d
               + d ** (-F / 2) * lam**F * (A0 + R**F)
               + c * d ** (-F / 2) * lam**Fm1 * (R**Fm1 + 2 * (2 * kap * delta + 4 * d) * R**Fm2 / lam
                                                + 2**F * kap * delta**Fm1)
               + c * 2**F * noise_constant(m) * lam ** (F / 2))
    return moment_bound(p, a) * bracket


def k_tau(p):
    q, d, L, lam, tau = p["q_v"], p["d"], p["l_q"], p["lambda_v"], p["tau"]
    return 2 ** (4 * q - 3) * L * ((1 + moment_bound(p, q - 1) * d ** ((q - 1) / 2) * lam ** (-(q - 1) / 2)) * 2 * d * tau
                                   + moment_bound(p, q + 1) * d ** ((q + 1) / 2) * tau ** ((q + 1) / 2))


def P(**kw):
    base = dict(d=10, kappa=1, lambda_v=1, r_v=1, tau=mp.mpf("0.1"), alpha=1, x0_norm=0,
                q_v=3, l_q=1)
    base.update({k: mp.mpf(v) if not isinstance(v, mp.mpf) else v for k, v in kw.items()})
    return {k: mp.mpf(v) for k, v in base.items()}


if __name__ == "__main__":
    print("cubic tau=0.5 x=10:", mp.nstr(cubic_root(mp.mpf("0.5"), mp.mpf(10)), 20))
    for k in (2, 4, 6):
        print(f"quartic c{k}:", mp.nstr(quartic_coordinate_moment(k), 20))
    for d in (1, 10):
        for m in (2, 4, 6):
            print(f"quartic d={d} m={m}:", mp.nstr(quartic_norm_moment(d, m), 20))
    print("E[Y^2] gamma form:", mp.nstr(2 * mp.gamma(0.75) / mp.gamma(0.25), 20))

    points = [
        ("C4 base", P(), 4),
        ("C2 base", P(), 2),
        ("C6 d=125 kappa=0.5", P(d=125, kappa="0.5", lambda_v="0.5", r_v=2, tau="0.01", x0_norm=3), 6),
        ("C3.5 alpha=0.5", P(d=50, kappa=2, lambda_v="0.8", r_v="0.5", tau="0.05", alpha="0.5", x0_norm=1), "3.5"),
        ("C1.5 lambda=2", P(d=20, kappa=1, lambda_v=2, r_v=0, tau="0.2", x0_norm=5), "1.5"),
    ]
    for label, p, m in points:
        print(label, mp.nstr(moment_bound(p, mp.mpf(m)), 20))
    kp = P(d=125, kappa=1, lambda_v=1, r_v=1, tau="0.01", alpha=1, x0_norm=1, q_v=3, l_q=1)
    print("K(0.01) q=3 d=125 unit:", mp.nstr(k_tau(kp), 20))
    print("noise C4:", noise_constant(4))
