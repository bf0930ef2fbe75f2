"""Dense complex matrix helpers.

Matrices are plain ``numpy`` complex arrays.  Every function here accepts a
stack of matrices with shape ``(..., n, n)`` and acts on the last two axes,
so grid-wide evaluation never needs a Python loop over points.
"""
import numpy as np

TOL = 1e-10
MAX_CLIFFORD = 12

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (_PAULI_X, _PAULI_Y, _PAULI_Z)


def as_matrix(a):
    """Return ``a`` as a complex array whose last two axes are square."""
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    return a


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def identity(n, batch=()):
    eye = np.eye(n, dtype=complex)
    if batch:
        eye = np.broadcast_to(eye, tuple(batch) + (n, n)).copy()
    return eye


def max_norm(a):
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_unitary(a, tol=TOL):
    a = as_matrix(a)
    return max_norm(a @ dagger(a) - np.eye(a.shape[-1])) < tol


def is_projection(p, tol=TOL):
    p = as_matrix(p)
    return max_norm(p @ p - p) < tol and max_norm(p - dagger(p)) < tol


def inverse_unitary(a):
    """Inverse of a unitary matrix, computed as its conjugate transpose."""
    return dagger(as_matrix(a))


def block_sum(a, b):
    """Place ``a`` in the upper-left block and ``b`` in the lower-right.

    Leading batch axes broadcast against each other.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    n, m = a.shape[-1], b.shape[-1]
    batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    out = np.zeros(batch + (n + m, n + m), dtype=complex)
    out[..., :n, :n] = a
    out[..., n:, n:] = b
    return out


def stabilize(a, n):
    """Block-sum ``a`` with an identity so that it has size ``n``."""
    a = as_matrix(a)
    k = a.shape[-1]
    if k > n:
        raise ValueError(f"cannot stabilize a {k}x{k} matrix down to {n}")
    if k == n:
        return a
    return block_sum(a, identity(n - k))


def clifford_generators(m):
    """Skew-hermitian generators of the negative definite Clifford algebra.

    Returns ``m`` matrices of size ``2**(m//2)`` with
    ``g[i] @ g[j] + g[j] @ g[i] == -2 * delta_ij * Id``.  They are
    ``1j`` times the usual Jordan-Wigner strings ``Z..Z X I..I`` and
    ``Z..Z Y I..I``.
    """
    if not isinstance(m, (int, np.integer)) or m <= 0 or m % 2:
        raise ValueError(f"number of generators must be a positive even integer, got {m!r}")
    if m > MAX_CLIFFORD:
        raise ValueError(f"at most {MAX_CLIFFORD} generators are supported, got {m}")
    k = m // 2
    gens = []
    for j in range(k):
        for pauli in (_PAULI_X, _PAULI_Y):
            factors = [_PAULI_Z] * j + [pauli] + [np.eye(2)] * (k - j - 1)
            mat = np.ones((1, 1), dtype=complex)
            for f in factors:
                mat = np.kron(mat, f)
            gens.append(1j * mat)
    return gens


def chirality(gens):
    """Hermitian involution proportional to the product of all generators.

    For an even number of generators the product anticommutes with every
    generator; it is rescaled by a power of ``1j`` so that it squares to
    the identity and is hermitian.
    """
    prod = np.eye(gens[0].shape[0], dtype=complex)
    for g in gens:
        prod = prod @ g
    m = len(gens)
    # prod^2 = (-1)^(m(m-1)/2) * (-1)^m
    sign = (-1) ** (m * (m - 1) // 2 + m)
    return prod if sign == 1 else 1j * prod


def projection_exponential(p, t, check=True):
    """``exp(2 pi i t P) = Id + (exp(2 pi i t) - 1) P`` for a projection ``P``.

    ``t`` may be an array broadcasting against the batch axes of ``p``.
    """
    p = as_matrix(p)
    if check and not is_projection(p):
        raise ValueError("argument is not an orthogonal projection")
    phase = np.exp(2j * np.pi * np.asarray(t, dtype=float)) - 1.0
    phase = np.asarray(phase)[..., None, None]
    return np.eye(p.shape[-1]) + phase * p


def quarter_turn(t):
    """``(cos(pi t / 2), sin(pi t / 2))`` with exact values at t = 0 and 1."""
    t = np.asarray(t, dtype=float)
    return np.sin(0.5 * np.pi * (1.0 - t)), np.sin(0.5 * np.pi * t)


def rotation_from_cos_sin(c, s, n):
    c = np.asarray(c, dtype=float)[..., None, None]
    s = np.asarray(s, dtype=float)[..., None, None]
    eye = np.eye(n)
    top = np.concatenate([c * eye, s * eye], axis=-1)
    bottom = np.concatenate([-s * eye, c * eye], axis=-1)
    return np.concatenate([top, bottom], axis=-2).astype(complex)


def rotation_block(theta, n):
    """The ``2n x 2n`` rotation ``[[cos, sin], [-sin, cos]]`` in ``n x n`` blocks."""
    theta = np.asarray(theta, dtype=float)
    return rotation_from_cos_sin(np.cos(theta), np.sin(theta), n)


def rotation_generator(n):
    """``J = [[0, Id], [-Id, 0]]``, the logarithmic derivative of the rotation block."""
    return rotation_from_cos_sin(0.0, 1.0, n)


def random_unitary(n, rng):
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(n, rng, scale=1.0):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (z + dagger(z)) / 2


def random_projection(n, rank, rng):
    q = random_unitary(n, rng)[:, :rank]
    return q @ dagger(q)
