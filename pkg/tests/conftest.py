import math

import numpy as np

from randx.devicemodel import components_device
from randx.matcore import haar_unitary


def _rotated_basis(theta):
    v0 = np.array([math.cos(theta), math.sin(theta)], dtype=complex)
    v1 = np.array([-math.sin(theta), math.cos(theta)], dtype=complex)
    return {0: np.outer(v0, v0.conj()), 1: np.outer(v1, v1.conj())}


def random_chsh_device(rng, perturbed=False):
    """Random CHSH-compatible two-site device.

    perturbed=True samples near the optimal construction (jittered angles,
    state mixed toward noise) so the interesting high-score region is
    covered; otherwise bases and state are fully random.
    """
    if perturbed:
        ang1 = {0: rng.normal(0.0, 0.3), 1: math.pi / 4 + rng.normal(0.0, 0.3)}
        ang2 = {0: math.pi / 8 + rng.normal(0.0, 0.3), 1: -math.pi / 8 + rng.normal(0.0, 0.3)}
        site1 = {a: _rotated_basis(t) for a, t in ang1.items()}
        site2 = {a: _rotated_basis(t) for a, t in ang2.items()}
        psi = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
        bell = np.outer(psi, psi.conj())
        lam = rng.uniform(0.0, 0.3)
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        noise = g.conj().T @ g
        noise /= np.trace(noise).real
        state = (1 - lam) * bell + lam * noise
    else:
        def rand_basis():
            u = haar_unitary(2, rng)
            return {
                0: np.outer(u[:, 0], u[:, 0].conj()),
                1: np.outer(u[:, 1], u[:, 1].conj()),
            }

        site1 = {0: rand_basis(), 1: rand_basis()}
        site2 = {0: rand_basis(), 1: rand_basis()}
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        state = g.conj().T @ g
        state /= np.trace(state).real
    return components_device((2, 2), state, (site1, site2))
