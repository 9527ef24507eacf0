"""Independent numpy evaluation of the reference numbers pinned in the C++ tests.

Run with `python3 tests/oracles/reference_values.py`; the printed values are
copied into the unit tests.
"""

import math

import numpy as np

FLOOR = 1e-300
TIE = 1e-12
# Probabilities at this level are rounding noise around an exact zero.
ZERO = 1e-14


def rho(omega_deg, rz=1.0, rx=1.0):
    w = math.radians(omega_deg)
    return 0.5 * np.array([[1 + rz * math.cos(w), rx * math.sin(w)], [rx * math.sin(w), 1 - rz * math.cos(w)]],
                          dtype=complex)


def tpow(m, n):
    out = np.array([[1.0 + 0j]])
    for _ in range(n):
        out = np.kron(out, m)
    return out


def helstrom_m0(r0, r1, lam, n):
    a = (1 - lam) * tpow(r0, n) - lam * tpow(r1, n)
    a = 0.5 * (a + a.conj().T)
    vals, vecs = np.linalg.eigh(a)
    m0 = np.zeros_like(a)
    for v, w in zip(vals, vecs.T):
        if v > 1e-10:
            m0 += np.outer(w, w.conj())
    return m0


def log_inc(p1, p0):
    def clean(p):
        return FLOOR if p <= ZERO else p

    return sum(a * (math.log(clean(a)) - math.log(clean(b))) for a, b in zip(p1, p0) if a > ZERO)


def helstrom_objective(r0, r1, lam, n):
    m0 = helstrom_m0(r0, r1, lam, n)
    P, Q = tpow(r0, n), tpow(r1, n)
    a0 = np.trace(P @ m0).real
    a1 = np.trace(Q @ m0).real
    return log_inc([a1, 1 - a1], [a0, 1 - a0])


def ry(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def cnot(n, control, target):
    dim = 2 ** n
    u = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        bits = [(j >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[control]:
            bits[target] ^= 1
        k = sum(b << (n - 1 - q) for q, b in enumerate(bits))
        u[k, j] = 1
    return u


def variational_u(theta, n):
    u = tpow(ry(theta), n)
    for i in range(n - 1):
        u = cnot(n, i, i + 1) @ u
    return u


def variational_probs(theta, n, r):
    u = variational_u(theta, n)
    return np.real(np.diag(u @ tpow(r, n) @ u.conj().T))


def main():
    zero, plus = rho(0), rho(90)

    print("helstrom weighted error |0>,|+>, lam=1/2:", 0.5 * (1 - np.abs(np.linalg.eigvalsh(0.5 * zero - 0.5 * plus)).sum()))
    print("expected log increment |+> vs |0>, lam=1/2, n=1: %.15g" % helstrom_objective(zero, plus, 0.5, 1))

    grid = [k / 100 for k in range(1, 100)]
    obj = [helstrom_objective(zero, plus, lam, 4) for lam in grid]
    best = max(obj)
    cands = [lam for lam, o in zip(grid, obj) if o >= best - TIE]
    lam_star = sorted(cands, key=lambda l: (abs(l - 0.5), l))[0]
    print("optimize_lambda |0>,|+>, n=4: lambda=%.2f objective=%.15g" % (lam_star, best))

    thetas = [2 * math.pi * k / 360 for k in range(360)]
    r0, r1 = rho(45), rho(90)
    tobj = [log_inc(variational_probs(t, 4, r1), variational_probs(t, 4, r0)) for t in thetas]
    tbest = max(tobj)
    k_star = next(k for k, o in enumerate(tobj) if o >= tbest - TIE)
    print("optimize_theta rho(45),rho(90), n=4: index=%d theta=%.15g objective=%.15g" % (k_star, thetas[k_star], tbest))

    feasible = []
    for lam in grid:
        m0 = helstrom_m0(zero, plus, lam, 4)
        size = 1 - np.trace(tpow(zero, 4) @ m0).real
        power = 1 - np.trace(tpow(plus, 4) @ m0).real
        if size <= 0.05:
            feasible.append((lam, size, power))
    top = max(p for _, _, p in feasible)
    lam_c, size_c, power_c = next(f for f in feasible if f[2] >= top - TIE)
    print("calibrate |0> vs |+>, n=4, eps0=0.05: lambda=%.2f size=%.15g power=%.15g" % (lam_c, size_c, power_c))

    # Grid MLE examples.
    angles = [45 + 0.5 * k for k in range(1, 271)]
    ll = [4 * math.log(max((1 + math.cos(math.radians(a))) / 2, FLOOR)) for a in angles]
    print("mle [0,0,0,0] over (45,180]:", angles[int(np.argmax(ll))])
    print("mle [1,1] over {45,135}:", max([45, 135], key=lambda a: 2 * math.log(max((1 - math.cos(math.radians(a))) / 2, FLOOR))))

    # Positive part of 0.5|0><0| - 0.5|+><+|.
    vals = np.linalg.eigvalsh(0.5 * zero - 0.5 * plus)
    print("eigenvalues of 0.5|0><0|-0.5|+><+|:", vals, "trace norm:", np.abs(vals).sum())

    # Per-block level for b = 2, 3, 5, 10 at eps0 = 0.05.
    for b in (2, 3, 5, 10):
        k = b // 2 + 1
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            tail = sum(math.comb(b, j) * mid ** j * (1 - mid) ** (b - j) for j in range(k, b + 1))
            lo, hi = (mid, hi) if tail <= 0.05 else (lo, mid)
        print("block level b=%d: %.12g" % (b, lo))


if __name__ == "__main__":
    main()
