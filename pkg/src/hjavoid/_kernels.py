"""Compiled grid sweep: ENO2 one-sided differences + local Lax-Friedrichs flux.

Any grid of 1..5 axes is handled as a 5-d array padded with leading unit
axes (unit axes contribute nothing).  Every node reads only the old field and
writes its own output slot, so the result does not depend on the thread count.

Velocity bounds are stored compactly over the trailing block of axes they
depend on: node ``i`` uses ``lo[a, c]`` with ``c = sum_b i_b * cstride[b]``.
"""

import numba as nb
import numpy as np


@nb.njit(inline="always")
def _pick(a, b):
    return a if abs(a) <= abs(b) else b


@nb.njit(inline="always")
def _at(v, i, k, n, s, o):
    kk = k + o
    if kk < 0:
        b = i - k * s
        return v[b] + kk * (v[b + s] - v[b])
    if kk > n - 1:
        b = i + (n - 1 - k) * s
        return v[b] + (kk - n + 1) * (v[b] - v[b - s])
    return v[i + o * s]


@nb.njit(inline="always")
def _flux(v, i, k, n, s, inv_dx, order, l, h):
    v0 = v[i]
    if 2 <= k and k <= n - 3:
        vm1 = v[i - s]
        vp1 = v[i + s]
        vm2 = v[i - 2 * s]
        vp2 = v[i + 2 * s]
    else:
        vm1 = _at(v, i, k, n, s, -1)
        vp1 = _at(v, i, k, n, s, 1)
        vm2 = _at(v, i, k, n, s, -2)
        vp2 = _at(v, i, k, n, s, 2)
    pm = (v0 - vm1) * inv_dx
    pp = (vp1 - v0) * inv_dx
    if order == 2:
        d2m = vm2 - 2.0 * vm1 + v0
        d20 = vm1 - 2.0 * v0 + vp1
        d2p = v0 - 2.0 * vp1 + vp2
        pm += 0.5 * inv_dx * _pick(d2m, d20)
        pp -= 0.5 * inv_dx * _pick(d20, d2p)
    pbar = 0.5 * (pm + pp)
    ham = max(-l * pbar, -h * pbar)
    alpha = max(abs(l), abs(h))
    return ham, -0.5 * alpha * (pp - pm)


@nb.njit(inline="always")
def _add(acc_c, acc_u, f, clamped):
    # clamped axes contribute their Hamiltonian part to acc_c; dissipation always goes to acc_u
    if clamped:
        return acc_c + f[0], acc_u + f[1]
    return acc_c, acc_u + f[0] + f[1]


@nb.njit(parallel=True, cache=True)
def sweep(v, shape, strides, cstrides, inv_dx, lo, hi, clamped, capture, order,
          dt, g, out, store_flux):
    """One pass over all nodes.

    ``store_flux``: out[i] = H_num(v)[i]; otherwise out[i] = max(v - dt*H_num, g),
    where in capture mode nodes with v <= 0 are not allowed to increase.
    """
    n0, n1, n2, n3, n4 = shape[0], shape[1], shape[2], shape[3], shape[4]
    s0, s1, s2, s3 = strides[0], strides[1], strides[2], strides[3]
    c0, c1, c2, c3, c4 = cstrides[0], cstrides[1], cstrides[2], cstrides[3], cstrides[4]
    for r in nb.prange(n0 * n1):
        i0 = r // n1
        i1 = r - i0 * n1
        for i2 in range(n2):
            for i3 in range(n3):
                ib = i0 * s0 + i1 * s1 + i2 * s2 + i3 * s3
                cb = i0 * c0 + i1 * c1 + i2 * c2 + i3 * c3
                for i4 in range(n4):
                    i = ib + i4
                    c = cb + i4 * c4
                    hc = 0.0
                    hu = 0.0
                    if n0 > 1:
                        hc, hu = _add(hc, hu, _flux(v, i, i0, n0, s0, inv_dx[0], order, lo[0, c], hi[0, c]), clamped[0])
                    if n1 > 1:
                        hc, hu = _add(hc, hu, _flux(v, i, i1, n1, s1, inv_dx[1], order, lo[1, c], hi[1, c]), clamped[1])
                    if n2 > 1:
                        hc, hu = _add(hc, hu, _flux(v, i, i2, n2, s2, inv_dx[2], order, lo[2, c], hi[2, c]), clamped[2])
                    if n3 > 1:
                        hc, hu = _add(hc, hu, _flux(v, i, i3, n3, s3, inv_dx[3], order, lo[3, c], hi[3, c]), clamped[3])
                    if n4 > 1:
                        hc, hu = _add(hc, hu, _flux(v, i, i4, n4, 1, inv_dx[4], order, lo[4, c], hi[4, c]), clamped[4])
                    if capture and hc < 0.0:
                        hc = 0.0
                    if store_flux:
                        out[i] = hc + hu
                    else:
                        val = v[i] - dt * (hc + hu)
                        if capture and v[i] <= 0.0 and val > v[i]:
                            val = v[i]
                        gi = g[i]
                        out[i] = val if val > gi else gi
