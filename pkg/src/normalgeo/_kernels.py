"""Compiled hot loops: catalog metric evaluation, stencil Christoffels,
RK4 geodesic integration with the variational (Jacobi) system, and the
frame ODE stepper.

Every function here is numba-jitted unless NORMALGEO_NO_NUMBA disables
compilation, in which case the same code runs as plain Python/numpy.
Catalog metrics are dispatched on an integer ``kind`` so the integrators
never call back into Python.  Generic (expression or user-callable)
metrics use the vectorized numpy path in :mod:`normalgeo.geodesics`.
"""

import numpy as np

from ._env import maybe_njit

# keep in sync with metrics.KIND_* constants
_MARGIN = 1e-6

STATUS_OK = 0
STATUS_DOMAIN = 1
STATUS_SINGULAR = 2


@maybe_njit(cache=True)
def point_ok(kind, params, p, lo, hi):
    n = p.shape[0]
    for i in range(n):
        if not np.isfinite(p[i]):
            return False
        if p[i] < lo[i] or p[i] > hi[i]:
            return False
    if kind == 4:
        K = params[0]
        n_minus = int(params[1])
        q = 0.0
        for i in range(n):
            e = -1.0 if i < n_minus else 1.0
            q += e * p[i] * p[i]
        if abs(1.0 + K * q / 4.0) <= _MARGIN:
            return False
    return True


@maybe_njit(cache=True)
def metric_eval(kind, params, p, out):
    n = p.shape[0]
    for i in range(n):
        for j in range(n):
            out[i, j] = 0.0
    if kind == 0:
        for i in range(n):
            out[i, i] = 1.0
    elif kind == 1:
        out[0, 0] = -1.0
        for i in range(1, n):
            out[i, i] = 1.0
    elif kind == 2:
        R2 = params[0] * params[0]
        out[0, 0] = R2
        acc = 1.0
        for k in range(1, n):
            s = np.sin(p[k - 1])
            acc *= s * s
            out[k, k] = R2 * acc
    elif kind == 3:
        R2 = params[0] * params[0]
        out[0, 0] = R2
        sh = np.sinh(p[0])
        acc = sh * sh
        for k in range(1, n):
            if k >= 2:
                s = np.sin(p[k - 1])
                acc *= s * s
            out[k, k] = R2 * acc
    elif kind == 4:
        K = params[0]
        n_minus = int(params[1])
        q = 0.0
        for i in range(n):
            e = -1.0 if i < n_minus else 1.0
            q += e * p[i] * p[i]
        f = 1.0 + K * q / 4.0
        f2 = 1.0 / (f * f)
        for i in range(n):
            e = -1.0 if i < n_minus else 1.0
            out[i, i] = f2 * e
    else:
        n_minus = int(params[0])
        a1 = params[1]
        ph1 = params[2]
        a2 = params[3]
        ph2 = params[4]
        s1 = ph1
        s2 = ph2
        for i in range(n):
            s1 += params[5 + i] * p[i]
            s2 += params[5 + n + i] * p[i]
        f = np.exp(2.0 * (a1 * np.sin(s1) + a2 * np.cos(s2)))
        for i in range(n):
            e = -1.0 if i < n_minus else 1.0
            out[i, i] = f * e


@maybe_njit(cache=True)
def _metric_d1(kind, params, p, h, dG):
    """Order-4 stencil first derivatives dG[a, i, j] = d_a G_ij."""
    n = p.shape[0]
    q = p.copy()
    buf = np.empty((n, n))
    for a in range(n):
        for i in range(n):
            for j in range(n):
                dG[a, i, j] = 0.0
        for s in range(4):
            off = (-2.0, -1.0, 1.0, 2.0)[s]
            w = (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0)[s]
            q[a] = p[a] + off * h
            metric_eval(kind, params, q, buf)
            for i in range(n):
                for j in range(n):
                    dG[a, i, j] += w * buf[i, j]
        q[a] = p[a]
        for i in range(n):
            for j in range(n):
                dG[a, i, j] /= h


@maybe_njit(cache=True)
def _metric_d2(kind, params, p, h, d2G):
    """Order-4 second derivatives d2G[a, b, i, j] (5-point diagonal,
    composed 4x4 stencil off-diagonal)."""
    n = p.shape[0]
    q = p.copy()
    buf = np.empty((n, n))
    g0 = np.empty((n, n))
    metric_eval(kind, params, p, g0)
    for a in range(n):
        for i in range(n):
            for j in range(n):
                d2G[a, a, i, j] = -30.0 * g0[i, j]
        for s in range(4):
            off = (-2.0, -1.0, 1.0, 2.0)[s]
            w = (-1.0, 16.0, 16.0, -1.0)[s]
            q[a] = p[a] + off * h
            metric_eval(kind, params, q, buf)
            for i in range(n):
                for j in range(n):
                    d2G[a, a, i, j] += w * buf[i, j]
        q[a] = p[a]
        for i in range(n):
            for j in range(n):
                d2G[a, a, i, j] /= 12.0 * h * h
    for a in range(n):
        for b in range(a + 1, n):
            for i in range(n):
                for j in range(n):
                    d2G[a, b, i, j] = 0.0
            for sa in range(4):
                offa = (-2.0, -1.0, 1.0, 2.0)[sa]
                wa = (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0)[sa]
                for sb in range(4):
                    offb = (-2.0, -1.0, 1.0, 2.0)[sb]
                    wb = (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0)[sb]
                    q[a] = p[a] + offa * h
                    q[b] = p[b] + offb * h
                    metric_eval(kind, params, q, buf)
                    for i in range(n):
                        for j in range(n):
                            d2G[a, b, i, j] += wa * wb * buf[i, j]
                q[a] = p[a]
                q[b] = p[b]
            for i in range(n):
                for j in range(n):
                    d2G[a, b, i, j] /= h * h
                    d2G[b, a, i, j] = d2G[a, b, i, j]


@maybe_njit(cache=True)
def connection_at(kind, params, p, h_rel, gamma, dgamma, with_derivative):
    """Gamma and optionally dGamma[s, r, m, l] = d_s Gamma^r_ml at p.

    Returns STATUS_SINGULAR when det G is numerically zero.
    """
    n = p.shape[0]
    amax = 1.0
    for i in range(n):
        if abs(p[i]) > amax:
            amax = abs(p[i])
    h = h_rel * amax
    g = np.empty((n, n))
    metric_eval(kind, params, p, g)
    det = np.linalg.det(g)
    scale = 1.0
    for i in range(n):
        for j in range(n):
            if abs(g[i, j]) > scale:
                scale = abs(g[i, j])
    if abs(det) < 1e-14 * scale**n:
        return STATUS_SINGULAR
    ginv = np.linalg.inv(g)
    dG = np.empty((n, n, n))
    _metric_d1(kind, params, p, h, dG)
    S = np.empty((n, n, n))
    for s in range(n):
        for m in range(n):
            for l in range(n):
                S[s, m, l] = dG[m, s, l] + dG[l, s, m] - dG[s, m, l]
    for r in range(n):
        for m in range(n):
            for l in range(n):
                acc = 0.0
                for s in range(n):
                    acc += ginv[r, s] * S[s, m, l]
                gamma[r, m, l] = 0.5 * acc
    if with_derivative:
        d2G = np.empty((n, n, n, n))
        _metric_d2(kind, params, p, h, d2G)
        dginv = np.empty((n, n, n))
        for a in range(n):
            tmp = np.dot(ginv, np.dot(dG[a], ginv))
            for i in range(n):
                for j in range(n):
                    dginv[a, i, j] = -tmp[i, j]
        for a in range(n):
            for r in range(n):
                for m in range(n):
                    for l in range(n):
                        acc = 0.0
                        for s in range(n):
                            dS = d2G[a, m, s, l] + d2G[a, l, s, m] - d2G[a, s, m, l]
                            acc += dginv[a, r, s] * S[s, m, l] + ginv[r, s] * dS
                        dgamma[a, r, m, l] = 0.5 * acc
    return STATUS_OK


@maybe_njit(cache=True)
def geodesic_rk4(kind, params, x0, v0, t_end, nsteps, h_rel, lo, hi, with_var, yd0):
    """Fixed-step RK4 geodesic integration with optional variational system.

    State: position x, velocity v, and when ``with_var`` the matrix Jacobi
    system Y'' = -2 Gamma(v, Y') - dGamma(v, v) Y with Y(0) = 0,
    Y'(0) = yd0.  Returns (status, ts, xs, vs, dets, Y, Yd); ``dets``
    tracks det Y along the way for conjugate-point monitoring.
    """
    n = x0.shape[0]
    ts = np.empty(nsteps + 1)
    xs = np.empty((nsteps + 1, n))
    vs = np.empty((nsteps + 1, n))
    dets = np.zeros(nsteps + 1)
    x = x0.copy()
    v = v0.copy()
    Y = np.zeros((n, n))
    Yd = yd0.copy()
    ts[0] = 0.0
    xs[0] = x
    vs[0] = v
    dt = t_end / nsteps
    gamma = np.empty((n, n, n))
    dgamma = np.empty((n, n, n, n))

    kx = np.empty((4, n))
    kv = np.empty((4, n))
    kY = np.empty((4, n, n))
    kYd = np.empty((4, n, n))
    status = STATUS_OK
    last = 0
    for step in range(nsteps):
        for stage in range(4):
            if stage == 0:
                xi = x
                vi = v
                Yi = Y
                Ydi = Yd
            else:
                c = 0.5 if stage < 3 else 1.0
                xi = x + c * dt * kx[stage - 1]
                vi = v + c * dt * kv[stage - 1]
                Yi = Y + c * dt * kY[stage - 1]
                Ydi = Yd + c * dt * kYd[stage - 1]
            if not point_ok(kind, params, xi, lo, hi):
                status = STATUS_DOMAIN
                break
            st = connection_at(kind, params, xi, h_rel, gamma, dgamma, with_var)
            if st != STATUS_OK:
                status = st
                break
            kx[stage] = vi
            for r in range(n):
                acc = 0.0
                for m in range(n):
                    for l in range(n):
                        acc += gamma[r, m, l] * vi[m] * vi[l]
                kv[stage, r] = -acc
            if with_var:
                for r in range(n):
                    for col in range(n):
                        acc = 0.0
                        for m in range(n):
                            for l in range(n):
                                acc += 2.0 * gamma[r, m, l] * vi[m] * Ydi[l, col]
                        for s in range(n):
                            q = 0.0
                            for m in range(n):
                                for l in range(n):
                                    q += dgamma[s, r, m, l] * vi[m] * vi[l]
                            acc += q * Yi[s, col]
                        kYd[stage, r, col] = -acc
                        kY[stage, r, col] = Ydi[r, col]
        if status != STATUS_OK:
            break
        x = x + (dt / 6.0) * (kx[0] + 2.0 * kx[1] + 2.0 * kx[2] + kx[3])
        v = v + (dt / 6.0) * (kv[0] + 2.0 * kv[1] + 2.0 * kv[2] + kv[3])
        if with_var:
            Y = Y + (dt / 6.0) * (kY[0] + 2.0 * kY[1] + 2.0 * kY[2] + kY[3])
            Yd = Yd + (dt / 6.0) * (kYd[0] + 2.0 * kYd[1] + 2.0 * kYd[2] + kYd[3])
        last = step + 1
        ts[last] = (step + 1) * dt
        xs[last] = x
        vs[last] = v
        if with_var:
            dets[last] = np.linalg.det(Y)
        if not point_ok(kind, params, x, lo, hi):
            status = STATUS_DOMAIN
            break
    return status, ts[: last + 1], xs[: last + 1], vs[: last + 1], dets[: last + 1], Y, Yd


@maybe_njit(cache=True)
def frame_ode_rk4(S1f, M, Rf, qf, z_up, t_end, nsteps, rec_stride, with_b):
    """Integrate the second-order frame equations along a fixed ray.

    A (flattened (n, n^2)) obeys A'' = t*S1 + M A; when ``with_b`` the
    rank-4 companion B ((n^2, n^2), rows (a,b), cols (c,d)) obeys
    B'' = t*R + q . (z . B).  Both start from zero value and velocity.
    Records every ``rec_stride`` steps plus the endpoint.
    """
    n = z_up.shape[0]
    n2 = n * n
    nrec = nsteps // rec_stride + 1
    if nsteps % rec_stride != 0:
        nrec += 1
    t_rec = np.empty(nrec)
    A_rec = np.empty((nrec, n, n2))
    B_rec = np.zeros((nrec, n2, n2))
    A = np.zeros((n, n2))
    Ad = np.zeros((n, n2))
    B = np.zeros((n2, n2))
    Bd = np.zeros((n2, n2))
    dt = t_end / nsteps
    idx = 0
    t_rec[0] = 0.0
    A_rec[0] = A
    idx = 1

    contr = np.empty((n, n2))
    for step in range(nsteps):
        t0 = step * dt
        # RK4 stages for the linear system y'' = f(t) + L y
        kA = np.empty((4, n, n2))
        kAd = np.empty((4, n, n2))
        kB = np.empty((4, n2, n2))
        kBd = np.empty((4, n2, n2))
        for stage in range(4):
            if stage == 0:
                tc = t0
                Ai = A
                Adi = Ad
                Bi = B
                Bdi = Bd
            else:
                c = 0.5 if stage < 3 else 1.0
                tc = t0 + c * dt
                Ai = A + c * dt * kA[stage - 1]
                Adi = Ad + c * dt * kAd[stage - 1]
                Bi = B + c * dt * kB[stage - 1]
                Bdi = Bd + c * dt * kBd[stage - 1]
            kA[stage] = Adi
            kAd[stage] = tc * S1f + np.dot(M, Ai)
            if with_b:
                kB[stage] = Bdi
                for pp in range(n):
                    for k in range(n2):
                        acc = 0.0
                        for mm in range(n):
                            acc += z_up[mm] * Bi[pp * n + mm, k]
                        contr[pp, k] = acc
                kBd[stage] = tc * Rf + np.dot(qf, contr)
        A = A + (dt / 6.0) * (kA[0] + 2.0 * kA[1] + 2.0 * kA[2] + kA[3])
        Ad = Ad + (dt / 6.0) * (kAd[0] + 2.0 * kAd[1] + 2.0 * kAd[2] + kAd[3])
        if with_b:
            B = B + (dt / 6.0) * (kB[0] + 2.0 * kB[1] + 2.0 * kB[2] + kB[3])
            Bd = Bd + (dt / 6.0) * (kBd[0] + 2.0 * kBd[1] + 2.0 * kBd[2] + kBd[3])
        if (step + 1) % rec_stride == 0 or step == nsteps - 1:
            t_rec[idx] = (step + 1) * dt
            A_rec[idx] = A
            if with_b:
                B_rec[idx] = B
            idx += 1
    return t_rec[:idx], A_rec[:idx], B_rec[:idx]
