"""Reference computations kept independent of the package quadrature code."""
import numpy as np

from lamecouple.bem import kelvin_tensor


def gauss_tensor_kelvin(edge_a, edge_b, lam, mu, order=32):
    """Plain tensor Gauss-Legendre rule for the P0-P0 single-layer entry of two edges."""
    g, w = np.polynomial.legendre.leggauss(order)
    s, w = 0.5 * (g + 1), 0.5 * w
    a0, a1 = map(np.asarray, edge_a)
    b0, b1 = map(np.asarray, edge_b)
    x = a0 + s[:, None] * (a1 - a0)
    y = b0 + s[:, None] * (b1 - b0)
    z = (x[:, None, :] - y[None, :, :]).reshape(-1, 2)
    G = kelvin_tensor(z, lam, mu).reshape(order, order, 2, 2)
    la, lb = np.linalg.norm(a1 - a0), np.linalg.norm(b1 - b0)
    return la * lb * np.einsum("i,j,ijkl->kl", w, w, G)


def log_moment_mp(dps=30):
    """``int_0^1 int_0^1 log|s - t| ds dt`` with mpmath, split at the diagonal."""
    import mpmath as mp

    mp.mp.dps = dps
    # by symmetry: 2 * int_0^1 int_0^s log(s - t) dt ds
    return 2 * mp.quad(lambda s: mp.quad(lambda t: mp.log(s - t), [0, s]), [0, 1])
