"""Pure-Python propagation kernel, used when the compiled extension is absent."""
import math

import numpy as np


def propagate(gens, up, dn):
    """Return the (n+1, 2) trajectory produced by the n step exponents in ``gens``.

    Row k of ``gens`` holds (a, bx, by, bz), already multiplied by dt/hbar.
    """
    gens = np.asarray(gens, dtype=float)
    n = gens.shape[0]
    out = np.empty((n + 1, 2), dtype=complex)
    x = complex(up)
    y = complex(dn)
    out[0, 0] = x
    out[0, 1] = y
    cos, sin, sqrt = math.cos, math.sin, math.sqrt
    for k, (a, bx, by, bz) in enumerate(gens.tolist()):
        nb = sqrt(bx * bx + by * by + bz * bz)
        c = cos(nb)
        s = sin(nb) / nb if nb > 1e-300 else 1.0
        ph = complex(cos(a), -sin(a))
        u00 = complex(c, -s * bz)
        u01 = complex(-s * by, -s * bx)
        u10 = complex(s * by, -s * bx)
        u11 = complex(c, s * bz)
        x, y = ph * (u00 * x + u01 * y), ph * (u10 * x + u11 * y)
        out[k + 1, 0] = x
        out[k + 1, 1] = y
    return out
