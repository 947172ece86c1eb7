"""In-place numba kernels over state blocks.

Every kernel works on a C-contiguous complex array of shape ``(2**n, B)``:
one column per state in the batch.  Angle arguments have a trailing axis of
length ``A`` which is either 1 (shared by all columns) or ``B``.
Qubit ``q`` is bit ``q`` of the row index.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _rotate_column(v, q, m00, m01, m10, m11):
    step = 1 << q
    for base in range(0, v.size, 2 * step):
        for i0 in range(base, base + step):
            i1 = i0 + step
            a0 = v[i0]
            a1 = v[i1]
            v[i0] = m00 * a0 + m01 * a1
            v[i1] = m10 * a0 + m11 * a1


@njit(cache=True)
def apply_1q(psi, q, m):
    """Apply the 2x2 matrices ``m`` of shape ``(A, 2, 2)`` to qubit ``q``."""
    dim, nb = psi.shape
    if m.shape[0] == 1 and nb == 1:
        _rotate_column(psi[:, 0], q, m[0, 0, 0], m[0, 0, 1], m[0, 1, 0], m[0, 1, 1])
        return
    step = 1 << q
    shared = m.shape[0] == 1
    for base in range(0, dim, 2 * step):
        for off in range(step):
            i0 = base + off
            i1 = i0 + step
            for b in range(nb):
                k = 0 if shared else b
                a0 = psi[i0, b]
                a1 = psi[i1, b]
                psi[i0, b] = m[k, 0, 0] * a0 + m[k, 0, 1] * a1
                psi[i1, b] = m[k, 1, 0] * a0 + m[k, 1, 1] * a1


@njit(cache=True)
def _rx_column(v, q, c, s):
    step = 1 << q
    for base in range(0, v.size, 2 * step):
        for i0 in range(base, base + step):
            i1 = i0 + step
            a0 = v[i0]
            a1 = v[i1]
            v[i0] = complex(c * a0.real + s * a1.imag, c * a0.imag - s * a1.real)
            v[i1] = complex(c * a1.real + s * a0.imag, c * a1.imag - s * a0.real)


@njit(cache=True)
def _ry_column(v, q, c, s):
    step = 1 << q
    for base in range(0, v.size, 2 * step):
        for i0 in range(base, base + step):
            i1 = i0 + step
            a0 = v[i0]
            a1 = v[i1]
            v[i0] = c * a0 - s * a1
            v[i1] = s * a0 + c * a1


@njit(cache=True)
def apply_layer(psi, qubits, paulis, angles, sign):
    """Rotations ``exp(-i sign a P / 2)`` on distinct qubits.

    ``paulis[l]`` is 1, 2 or 3 for X, Y or Z; ``angles`` is ``(L, A)``.
    """
    n_rot, na = angles.shape
    nb = psi.shape[1]
    m = np.empty((na, 2, 2), dtype=np.complex128)
    for l in range(n_rot):
        p = paulis[l]
        if na == 1 and nb == 1 and p != 3:
            half = 0.5 * sign * angles[l, 0]
            if p == 1:
                _rx_column(psi[:, 0], qubits[l], np.cos(half), np.sin(half))
            else:
                _ry_column(psi[:, 0], qubits[l], np.cos(half), np.sin(half))
            continue
        for k in range(na):
            half = 0.5 * sign * angles[l, k]
            c = np.cos(half)
            s = np.sin(half)
            if p == 1:
                m[k, 0, 0] = c
                m[k, 0, 1] = -1j * s
                m[k, 1, 0] = -1j * s
                m[k, 1, 1] = c
            elif p == 2:
                m[k, 0, 0] = c
                m[k, 0, 1] = -s
                m[k, 1, 0] = s
                m[k, 1, 1] = c
            else:
                m[k, 0, 0] = complex(c, -s)
                m[k, 0, 1] = 0.0
                m[k, 1, 0] = 0.0
                m[k, 1, 1] = complex(c, s)
        apply_1q(psi, qubits[l], m)


@njit(cache=True)
def _im_overlap_column(lv, v, q, p):
    """``Im <lv| P_q |v>`` for P = X (1), Y (2) or Z (3)."""
    step = 1 << q
    acc = 0.0
    for base in range(0, v.size, 2 * step):
        for i0 in range(base, base + step):
            i1 = i0 + step
            l0 = lv[i0]
            l1 = lv[i1]
            a0 = v[i0]
            a1 = v[i1]
            if p == 1:
                acc += (l0.real * a1.imag - l0.imag * a1.real
                        + l1.real * a0.imag - l1.imag * a0.real)
            elif p == 2:
                # Y|a> = (-i a1, i a0)
                acc += -(l0.real * a1.real + l0.imag * a1.imag) + (l1.real * a0.real + l1.imag * a0.imag)
            else:
                acc += (l0.real * a0.imag - l0.imag * a0.real
                        - l1.real * a1.imag + l1.imag * a1.real)
    return acc


@njit(cache=True)
def im_overlap_layer(lam, psi, qubits, paulis):
    """``out[l, b] = Im <lam_b| P_l on qubit qubits[l] |psi_b>``."""
    nb = psi.shape[1]
    out = np.zeros((qubits.size, nb))
    for l in range(qubits.size):
        for b in range(nb):
            out[l, b] = _im_overlap_column(lam[:, b], psi[:, b], qubits[l], paulis[l])
    return out


@njit(cache=True)
def diagonal_phases(num_qubits, hi, lo, angles):
    """Phases of a product of commuting Z-rotations, ``(2**n, A)``.

    Term ``t`` is ``exp(-i a Z_hi / 2)`` when ``lo[t] < 0`` and
    ``exp(-i a Z_lo Z_hi / 2)`` otherwise (``lo < hi``).  The table is built
    by doubling over qubits so only one exponential per term is evaluated.
    """
    n_terms, na = angles.shape
    dim = 1 << num_qubits
    factor = np.empty((n_terms, na), dtype=np.complex128)
    for t in range(n_terms):
        for k in range(na):
            half = 0.5 * angles[t, k]
            factor[t, k] = np.cos(half) - 1j * np.sin(half)
    phase = np.empty((dim, na), dtype=np.complex128)
    for k in range(na):
        phase[0, k] = 1.0
    size = 1
    for q in range(num_qubits):
        for i in range(size):
            for k in range(na):
                f0 = phase[i, k]
                f1 = phase[i, k]
                for t in range(n_terms):
                    if hi[t] != q:
                        continue
                    e = factor[t, k]
                    if lo[t] >= 0 and (i >> lo[t]) & 1:
                        f0 *= np.conj(e)
                        f1 *= e
                    else:
                        f0 *= e
                        f1 *= np.conj(e)
                phase[i, k] = f0
                phase[i + size, k] = f1
        size *= 2
    return phase


@njit(cache=True)
def apply_phases(psi, phase, conjugate):
    dim, nb = psi.shape
    shared = phase.shape[1] == 1
    for i in range(dim):
        for b in range(nb):
            ph = phase[i, 0] if shared else phase[i, b]
            psi[i, b] *= np.conj(ph) if conjugate else ph


@njit(cache=True)
def apply_cnot(psi, control, target):
    dim, nb = psi.shape
    cbit = 1 << control
    tbit = 1 << target
    for i in range(dim):
        if (i & cbit) and not (i & tbit):
            j = i | tbit
            for b in range(nb):
                tmp = psi[i, b]
                psi[i, b] = psi[j, b]
                psi[j, b] = tmp


@njit(cache=True)
def diagonal_gradients(lam, psi, hi, lo):
    """``out[t, b] = sum_i s_t(i) Im(conj(lam[i, b]) psi[i, b])`` for the Z-strings of ``diagonal_phases``."""
    dim, nb = psi.shape
    n_terms = hi.size
    out = np.zeros((n_terms, nb))
    for i in range(dim):
        for b in range(nb):
            l = lam[i, b]
            a = psi[i, b]
            w = l.real * a.imag - l.imag * a.real
            for t in range(n_terms):
                bit = (i >> hi[t]) & 1
                if lo[t] >= 0:
                    bit ^= (i >> lo[t]) & 1
                if bit:
                    out[t, b] -= w
                else:
                    out[t, b] += w
    return out
