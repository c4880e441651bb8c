# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled scattering kernels.

Mirrors ``toa_sim.kernels.reference`` operation for operation; the
reference module is the semantic source of truth.  Hot paths only:
batched sharp-edge matching solves and transfer-matrix composition.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double complex csqrt(double complex)
    double complex ccos(double complex)
    double complex csin(double complex)
    double cabs(double complex)
    double creal(double complex)
    double cimag(double complex)

cdef extern from "math.h" nogil:
    double log(double)
    double exp(double)
    double fabs(double)

BACKEND_NAME = "compiled"

cdef double DTHETA_JORDAN = 1e-5
cdef double SINC_SMALL = 1e-12


cdef inline double complex sqrt_upper(double complex z) nogil:
    cdef double complex s = csqrt(z)
    if cimag(s) < 0.0 or (cimag(s) == 0.0 and creal(s) < 0.0):
        s = -s
    return s


cdef int gauss_solve(double complex *a, double complex *b, int n) nogil:
    """In-place partial-pivot elimination on row-major a (n x n); rhs in b.

    Returns 0 on success, -1 when a pivot vanishes (singular system).
    """
    cdef int i, j, p, piv
    cdef double best, mag
    cdef double complex tmp, factor
    for i in range(n):
        piv = i
        best = cabs(a[i * n + i])
        for p in range(i + 1, n):
            mag = cabs(a[p * n + i])
            if mag > best:
                best = mag
                piv = p
        if best == 0.0:
            return -1
        if piv != i:
            for j in range(n):
                tmp = a[i * n + j]
                a[i * n + j] = a[piv * n + j]
                a[piv * n + j] = tmp
            tmp = b[i]
            b[i] = b[piv]
            b[piv] = tmp
        for p in range(i + 1, n):
            factor = a[p * n + i] / a[i * n + i]
            if factor != 0.0:
                for j in range(i, n):
                    a[p * n + j] = a[p * n + j] - factor * a[i * n + j]
                b[p] = b[p] - factor * b[i]
    for i in range(n - 1, -1, -1):
        tmp = b[i]
        for j in range(i + 1, n):
            tmp = tmp - a[i * n + j] * b[j]
        b[i] = tmp / a[i * n + i]
    return 0


def sharp_edge_solve(k, double gamma, double omega, double beam_width,
                     double mass, double hbar):
    """Batched sharp-edge matching solve; see reference.sharp_edge_solve."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] karr = np.ascontiguousarray(
        np.atleast_1d(np.asarray(k, dtype=np.float64)))
    cdef Py_ssize_t nk = karr.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.empty((nk, 8), dtype=np.complex128)

    cdef double complex disc, lam_p, lam_m, u_p, u_m
    disc = csqrt(gamma * gamma - 4.0 * omega * omega + 0j)
    lam_p = -0.25j * gamma + 0.25j * disc
    lam_m = -0.25j * gamma - 0.25j * disc
    u_p = 2.0 * lam_p / omega
    u_m = 2.0 * lam_m / omega

    cdef double complex A[64]
    cdef double complex b[8]
    cdef double complex q, kp, km, ep, em, fk, fq, kps, kms, qs
    cdef double kv, L = beam_width
    cdef Py_ssize_t i, j
    cdef int status

    with nogil:
        for i in range(nk):
            kv = karr[i]
            q = sqrt_upper(kv * kv + 1j * gamma * mass / hbar)
            if gamma == 0.0:
                q = kv + 0j
            kp = sqrt_upper(kv * kv - 2.0 * mass * lam_p / hbar)
            km = sqrt_upper(kv * kv - 2.0 * mass * lam_m / hbar)
            ep = cexp(1j * kp * L)
            em = cexp(1j * km * L)
            fk = cexp(1j * kv * L)
            fq = cexp(1j * q * L)
            kps = kp / kv
            kms = km / kv
            qs = q / kv

            for j in range(64):
                A[j] = 0.0
            for j in range(8):
                b[j] = 0.0

            # Unknowns [R1, R2, T1, T2, a, b, c, d]; derivative rows are
            # pre-divided by k exactly as in the reference assembly.
            A[0 * 8 + 0] = -1.0
            A[0 * 8 + 4] = 1.0
            A[0 * 8 + 5] = 1.0
            A[0 * 8 + 6] = ep
            A[0 * 8 + 7] = em
            b[0] = 1.0

            A[1 * 8 + 0] = 1.0
            A[1 * 8 + 4] = kps
            A[1 * 8 + 5] = kms
            A[1 * 8 + 6] = -kps * ep
            A[1 * 8 + 7] = -kms * em
            b[1] = 1.0

            A[2 * 8 + 1] = -1.0
            A[2 * 8 + 4] = u_p
            A[2 * 8 + 5] = u_m
            A[2 * 8 + 6] = u_p * ep
            A[2 * 8 + 7] = u_m * em

            A[3 * 8 + 1] = qs
            A[3 * 8 + 4] = kps * u_p
            A[3 * 8 + 5] = kms * u_m
            A[3 * 8 + 6] = -kps * u_p * ep
            A[3 * 8 + 7] = -kms * u_m * em

            A[4 * 8 + 2] = -fk
            A[4 * 8 + 4] = ep
            A[4 * 8 + 5] = em
            A[4 * 8 + 6] = 1.0
            A[4 * 8 + 7] = 1.0

            A[5 * 8 + 2] = -fk
            A[5 * 8 + 4] = kps * ep
            A[5 * 8 + 5] = kms * em
            A[5 * 8 + 6] = -kps
            A[5 * 8 + 7] = -kms

            A[6 * 8 + 3] = -fq
            A[6 * 8 + 4] = u_p * ep
            A[6 * 8 + 5] = u_m * em
            A[6 * 8 + 6] = u_p
            A[6 * 8 + 7] = u_m

            A[7 * 8 + 3] = -qs * fq
            A[7 * 8 + 4] = kps * u_p * ep
            A[7 * 8 + 5] = kms * u_m * em
            A[7 * 8 + 6] = -kps * u_p
            A[7 * 8 + 7] = -kms * u_m

            status = gauss_solve(A, b, 8)
            for j in range(8):
                out[i, j] = b[j] if status == 0 else (0.0 / 0.0) + 0j
    return out


cdef inline void cos_sinc(double complex z, double complex root, double w,
                          double complex *c_out, double complex *s_out) nogil:
    """cos(w sqrt z) and sin(w sqrt z)/sqrt z from the precomputed root.

    Series below theta^2 ~ 1e-12, direct cos/sin up to theta^2 ~ 1e-4
    (where the exponential form would cancel), single cexp beyond.
    """
    cdef double t2 = cabs(z) * w * w
    cdef double complex ep, inv
    if t2 < SINC_SMALL:
        c_out[0] = 1.0 - 0.5 * z * w * w
        s_out[0] = w * (1.0 - z * w * w / 6.0)
    elif t2 < 1e-4:
        c_out[0] = ccos(w * root)
        s_out[0] = csin(w * root) / root
    else:
        ep = cexp(1j * w * root)
        inv = 1.0 / ep
        c_out[0] = 0.5 * (ep + inv)
        s_out[0] = (ep - inv) / (2j * root)


cdef void slice_prop_lam(double kv, double omega, double w,
                         double complex lam_p, double complex lam_m,
                         double gamma, double mass, double hbar,
                         double complex *P) nogil:
    """Fill P (row-major 4x4) with the value/derivative slice propagator.

    lam_p/lam_m are the internal eigenrates for this slice's coupling
    (ignored for omega == 0).  Cosines/sines are built from one complex
    exponential per mode; all branches match the reference module.
    """
    cdef double complex k2 = kv * kv + 0j
    cdef double complex W12 = -mass * omega / hbar + 0j
    cdef double complex zp, zm, dz, wm1, wm2, wb1, wb2
    # dz = zp - zm and the projector numerators W - zm I in closed form;
    # subtracting the k^2-sized eigenvalues would cancel catastrophically.
    if omega == 0.0:
        zp = k2
        zm = k2 + 1j * gamma * mass / hbar
        dz = -1j * gamma * mass / hbar
        wm1 = dz
        wm2 = 0.0
        wb1 = 0.5 * dz
        wb2 = -0.5 * dz
    else:
        zp = k2 - 2.0 * mass * lam_p / hbar
        zm = k2 - 2.0 * mass * lam_m / hbar
        dz = -2.0 * mass * (lam_p - lam_m) / hbar
        wm1 = 2.0 * mass * lam_m / hbar
        wm2 = mass * (1j * gamma + 2.0 * lam_m) / hbar
        wb1 = mass * (lam_p + lam_m) / hbar
        wb2 = mass * (1j * gamma + lam_p + lam_m) / hbar

    cdef double complex rp = csqrt(zp)
    cdef double complex rm = csqrt(zm)
    cdef double rsum = cabs(rp + rm)
    cdef double dtheta
    if rsum > 0.0:
        dtheta = w * cabs(dz) / rsum
    else:
        dtheta = 0.0
    cdef bint degenerate = dtheta <= DTHETA_JORDAN

    cdef double complex cp, cm, sp, sm
    cos_sinc(zp, rp, w, &cp, &sp)
    cos_sinc(zm, rm, w, &cm, &sm)

    cdef double complex zb, rb, cb, sb, dcb, dsb, WSb, dWSb
    cdef double complex g, wsm
    cdef double complex C11, C12, C22, S11, S12, S22, D11, D12, D22

    if degenerate:
        zb = 0.5 * (zp + zm)
        rb = csqrt(zb)
        cos_sinc(zb, rb, w, &cb, &sb)
        dcb = -0.5 * w * sb
        if cabs(zb) * w * w < 1e-10:
            dsb = -(w * w * w) / 6.0 + zb * (w * w * w * w * w) / 60.0
        else:
            dsb = (w * cb - sb) / (2.0 * zb)
        WSb = zb * sb
        dWSb = sb + zb * dsb
        C11 = cb + dcb * wb1
        C22 = cb + dcb * wb2
        C12 = dcb * W12
        S11 = sb + dsb * wb1
        S22 = sb + dsb * wb2
        S12 = dsb * W12
        D11 = WSb + dWSb * wb1
        D22 = WSb + dWSb * wb2
        D12 = dWSb * W12
    else:
        g = (cp - cm) / dz
        C11 = g * wm1 + cm
        C22 = g * wm2 + cm
        C12 = g * W12
        g = (sp - sm) / dz
        S11 = g * wm1 + sm
        S22 = g * wm2 + sm
        S12 = g * W12
        # (zp sp - zm sm)/dz, cancellation-free via the sinc quotient
        wsm = zm * sm
        g = zm * g + sp
        D11 = g * wm1 + wsm
        D22 = g * wm2 + wsm
        D12 = g * W12

    P[0 * 4 + 0] = C11
    P[0 * 4 + 1] = S11
    P[0 * 4 + 2] = C12
    P[0 * 4 + 3] = S12
    P[1 * 4 + 0] = -D11
    P[1 * 4 + 1] = C11
    P[1 * 4 + 2] = -D12
    P[1 * 4 + 3] = C12
    P[2 * 4 + 0] = C12
    P[2 * 4 + 1] = S12
    P[2 * 4 + 2] = C22
    P[2 * 4 + 3] = S22
    P[3 * 4 + 0] = -D12
    P[3 * 4 + 1] = C12
    P[3 * 4 + 2] = -D22
    P[3 * 4 + 3] = C22


def transfer_solve(k, edges, omegas, double gamma, double mass, double hbar):
    """Batched transfer-matrix amplitudes; see reference.transfer_solve."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] karr = np.ascontiguousarray(
        np.atleast_1d(np.asarray(k, dtype=np.float64)))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] earr = np.ascontiguousarray(
        np.asarray(edges, dtype=np.float64))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] oarr = np.ascontiguousarray(
        np.asarray(omegas, dtype=np.float64))
    cdef Py_ssize_t nk = karr.shape[0]
    cdef Py_ssize_t ns = oarr.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.empty((nk, 4), dtype=np.complex128)

    # Per-slice internal eigenrates depend only on the slice coupling.
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] lam_p_arr = np.empty(ns, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] lam_m_arr = np.empty(ns, dtype=np.complex128)
    cdef double complex disc
    cdef Py_ssize_t si
    for si in range(ns):
        disc = csqrt(gamma * gamma - 4.0 * oarr[si] * oarr[si] + 0j)
        lam_p_arr[si] = -0.25j * gamma + 0.25j * disc
        lam_m_arr[si] = -0.25j * gamma - 0.25j * disc

    cdef double complex M[16]
    cdef double complex P[16]
    cdef double complex T[16]
    cdef double complex B[16]
    cdef double complex rhs[4]
    cdef double complex inc[4]
    cdef double complex r1[4]
    cdef double complex r2[4]
    cdef double complex q, growth
    cdef double kv, log_scale, scale, mag, x_left, x_right
    cdef Py_ssize_t i, j, s, r, c
    cdef int status

    x_left = earr[0]
    x_right = earr[ns]

    cdef double complex B0[16]
    cdef double complex rhs0[4]
    cdef double complex resid[4]
    cdef double complex qk

    with nogil:
        for i in range(nk):
            kv = karr[i]
            q = sqrt_upper(kv * kv + 1j * gamma * mass / hbar)
            if gamma == 0.0:
                q = kv + 0j
            qk = q / kv

            # Composition in the scaled basis (phi1, phi1'/k, phi2, phi2'/k):
            # all entries O(1), matching the reference implementation.
            for j in range(16):
                M[j] = 0.0
            M[0] = M[5] = M[10] = M[15] = 1.0
            log_scale = 0.0
            for s in range(ns):
                slice_prop_lam(kv, oarr[s], earr[s + 1] - earr[s],
                               lam_p_arr[s], lam_m_arr[s], gamma, mass, hbar, P)
                P[0 * 4 + 1] = P[0 * 4 + 1] * kv
                P[0 * 4 + 3] = P[0 * 4 + 3] * kv
                P[2 * 4 + 1] = P[2 * 4 + 1] * kv
                P[2 * 4 + 3] = P[2 * 4 + 3] * kv
                P[1 * 4 + 0] = P[1 * 4 + 0] / kv
                P[1 * 4 + 2] = P[1 * 4 + 2] / kv
                P[3 * 4 + 0] = P[3 * 4 + 0] / kv
                P[3 * 4 + 2] = P[3 * 4 + 2] / kv
                for r in range(4):
                    for c in range(4):
                        T[r * 4 + c] = (P[r * 4 + 0] * M[0 * 4 + c]
                                        + P[r * 4 + 1] * M[1 * 4 + c]
                                        + P[r * 4 + 2] * M[2 * 4 + c]
                                        + P[r * 4 + 3] * M[3 * 4 + c])
                scale = 0.0
                for j in range(16):
                    M[j] = T[j]
                    mag = cabs(M[j])
                    if mag > scale:
                        scale = mag
                if scale > 0.0:
                    for j in range(16):
                        M[j] = M[j] / scale
                    log_scale += log(scale)

            inc[0] = cexp(1j * kv * x_left)
            inc[1] = 1j * inc[0]
            inc[2] = 0.0
            inc[3] = 0.0
            r1[0] = cexp(-1j * kv * x_left)
            r1[1] = -1j * r1[0]
            r1[2] = 0.0
            r1[3] = 0.0
            r2[0] = 0.0
            r2[1] = 0.0
            r2[2] = cexp(-1j * q * x_left)
            r2[3] = -1j * qk * r2[2]

            # Columns: [t1, t2, -M r1, -M r2]; rhs = M inc.
            for r in range(4):
                B[r * 4 + 0] = 0.0
                B[r * 4 + 1] = 0.0
                B[r * 4 + 2] = -(M[r * 4 + 0] * r1[0] + M[r * 4 + 1] * r1[1]
                                 + M[r * 4 + 2] * r1[2] + M[r * 4 + 3] * r1[3])
                B[r * 4 + 3] = -(M[r * 4 + 0] * r2[0] + M[r * 4 + 1] * r2[1]
                                 + M[r * 4 + 2] * r2[2] + M[r * 4 + 3] * r2[3])
                rhs[r] = (M[r * 4 + 0] * inc[0] + M[r * 4 + 1] * inc[1]
                          + M[r * 4 + 2] * inc[2] + M[r * 4 + 3] * inc[3])
            B[0 * 4 + 0] = cexp(1j * kv * x_right)
            B[1 * 4 + 0] = 1j * B[0 * 4 + 0]
            B[2 * 4 + 1] = cexp(1j * q * x_right)
            B[3 * 4 + 1] = 1j * qk * B[2 * 4 + 1]

            for j in range(16):
                B0[j] = B[j]
            for j in range(4):
                rhs0[j] = rhs[j]
            status = gauss_solve(B, rhs, 4)
            if status == 0:
                # one refinement step, as in the reference implementation
                for r in range(4):
                    resid[r] = (B0[r * 4 + 0] * rhs[0] + B0[r * 4 + 1] * rhs[1]
                                + B0[r * 4 + 2] * rhs[2] + B0[r * 4 + 3] * rhs[3]
                                - rhs0[r])
                for j in range(16):
                    B[j] = B0[j]
                if gauss_solve(B, resid, 4) == 0:
                    for j in range(4):
                        rhs[j] = rhs[j] - resid[j]
                growth = exp(log_scale) + 0j
                out[i, 0] = rhs[2]
                out[i, 1] = rhs[3]
                out[i, 2] = rhs[0] * growth
                out[i, 3] = rhs[1] * growth
            else:
                for j in range(4):
                    out[i, j] = (0.0 / 0.0) + 0j
    return out
