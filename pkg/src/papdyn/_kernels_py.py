"""Pure-Python stepping kernels.

Same signatures and arithmetic order as the compiled ``_ckernels`` module,
used when the extension is not built or ``PAPDYN_PURE=1`` is set.
"""
import math

SNAP = 1e-9


def _act(code, param, x, tab_x, tab_y, start, length):
    if code == 0:
        return math.sin(x)
    if code == 1:
        return math.tanh(x)
    if code == 2:
        return param if x > param else (-param if x < -param else x)
    lo = start
    hi = start + length - 1
    if x <= tab_x[lo]:
        return tab_y[lo]
    if x >= tab_x[hi]:
        return tab_y[hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tab_x[mid] <= x:
            lo = mid
        else:
            hi = mid
    w = (x - tab_x[lo]) / (tab_x[hi] - tab_x[lo])
    return tab_y[lo] + w * (tab_y[hi] - tab_y[lo])


def rk4_dde(h, x0, c, I, d, a, b, act_code, act_param, tab_x, tab_y, tab_start, tab_len,
            delays, tau_idx, sigma_idx, nu_idx, hist, values, derivs):
    """Fixed-step RK4 for the delayed network on the half-step time grid.

    Coefficient arrays are sampled at ``t0 + m*h/2`` (last axis ``m``).
    Delayed states at or before ``t0`` come from ``hist[q, m]``; later ones
    are cubic Hermite interpolants of the stored ``values``/``derivs``.
    Returns the first step index with a non-finite state, or -1.
    """
    n = len(x0)
    nsteps = values.shape[0] - 1
    nq = len(delays)
    cL, IL = c.tolist(), I.tolist()
    dL, aL, bL = d.tolist(), a.tolist(), b.tolist()
    code, par = act_code.tolist(), act_param.tolist()
    tstart, tlen = tab_start.tolist(), tab_len.tolist()
    tx, ty = tab_x.tolist(), tab_y.tolist()
    D = delays.tolist()
    ti, si, ni = tau_idx.tolist(), sigma_idx.tolist(), nu_idx.tolist()
    vals = [[0.0] * n for _ in range(nsteps + 1)]
    ders = [[0.0] * n for _ in range(nsteps + 1)]
    vals[0] = [float(v) for v in x0]

    def act(kind, j, x):
        return _act(code[kind][j], par[kind][j], x, tx, ty, tstart[kind][j], tlen[kind][j])

    def delayed(m):
        out = []
        for q in range(nq):
            u = m * 0.5 * h - D[q]
            if u <= SNAP * h:
                out.append(hist[q, m].tolist())
                continue
            s = u / h
            j = int(math.floor(s))
            th = s - j
            if th > 1.0 - SNAP:
                j += 1
                th = 0.0
            if th < SNAP:
                out.append(list(vals[j]))
                continue
            th2 = th * th
            th3 = th2 * th
            h00 = 2 * th3 - 3 * th2 + 1
            h10 = th3 - 2 * th2 + th
            h01 = -2 * th3 + 3 * th2
            h11 = th3 - th2
            y0, y1, m0, m1 = vals[j], vals[j + 1], ders[j], ders[j + 1]
            out.append([h00 * y0[i] + h10 * h * m0[i] + h01 * y1[i] + h11 * h * m1[i]
                        for i in range(n)])
        return out

    def f(m, x, xd):
        fx = [act(0, j, x[j]) for j in range(n)]
        res = [0.0] * n
        for i in range(n):
            acc = -cL[i][m] * x[i] + IL[i][m]
            for j in range(n):
                acc += dL[i][j][m] * fx[j]
                acc += aL[i][j][m] * act(1, j, xd[ti[i][j]][j])
                for l in range(n):
                    bv = bL[i][j][l][m]
                    if bv != 0.0:
                        acc += bv * act(2, j, xd[si[i][j]][j]) * act(2, l, xd[ni[i][j]][l])
            res[i] = acc
        return res

    bad = -1
    xd0 = delayed(0)
    for k in range(nsteps):
        x = vals[k]
        k1 = f(2 * k, x, xd0)
        ders[k] = k1
        xdm = delayed(2 * k + 1)
        k2 = f(2 * k + 1, [x[i] + 0.5 * h * k1[i] for i in range(n)], xdm)
        k3 = f(2 * k + 1, [x[i] + 0.5 * h * k2[i] for i in range(n)], xdm)
        xd0 = delayed(2 * k + 2)
        k4 = f(2 * k + 2, [x[i] + h * k3[i] for i in range(n)], xd0)
        xn = [x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(n)]
        vals[k + 1] = xn
        if not all(math.isfinite(v) for v in xn):
            bad = k + 1
            break
    if bad < 0:
        ders[nsteps] = f(2 * nsteps, vals[nsteps], xd0)
    values[:] = vals
    derivs[:] = ders
    return bad


def expo_recursion(E, P, y):
    """``y[:, k+1] = E[:, k] * y[:, k] + P[:, k]`` in place."""
    n, nsteps = E.shape
    for i in range(n):
        e, p = E[i].tolist(), P[i].tolist()
        acc = float(y[i, 0])
        out = [acc]
        for k in range(nsteps):
            acc = e[k] * acc + p[k]
            out.append(acc)
        y[i, :] = out
