"""Counter-addressed standard normal variates.

A variate is a pure function of ``(master_seed, replica, counter)``:

1. Philox-4x64 (numpy's ``Philox`` bit generator) is keyed with the 128-bit
   key ``(master_seed, replica)``.
2. Counter value ``b`` yields one 4x64-bit block: the first four raw outputs
   of ``Philox(key=key, counter=[b, 0, 0, 0])``.
3. Each raw word ``w`` becomes a uniform ``((w >> 11) + 0.5) * 2^-53`` in
   the open interval (0, 1).
4. Box-Muller on the pairs (u0, u1) and (u2, u3) gives four normals
   ``z0 = r0 cos(2 pi u1), z1 = r0 sin(2 pi u1), z2 = r2 cos(2 pi u3),
   z3 = r2 sin(2 pi u3)`` with ``r = sqrt(-2 log u)``.
5. Variate number ``c`` is ``z[c % 4]`` of block ``c // 4``.

Reading a slice never depends on what was read before, so results do not
depend on evaluation order or on how replicas are split among workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SEED = 0x5EED_0001
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class GaussianStream:
    master_seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= _MASK64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        object.__setattr__(self, "master_seed", int(self.master_seed))

    def normals(self, replica: int, start: int, count: int) -> np.ndarray:
        """Variates with counters ``start .. start + count - 1``."""
        if replica < 0 or start < 0 or count < 0:
            raise ValueError("replica, start and count must be non-negative")
        if count == 0:
            return np.empty(0)
        first_block = start // 4
        last_block = (start + count - 1) // 4
        nblocks = last_block - first_block + 1
        bitgen = np.random.Philox(
            key=np.array([self.master_seed, replica], dtype=np.uint64),
            counter=np.array([first_block, 0, 0, 0], dtype=np.uint64),
        )
        raw = bitgen.random_raw(4 * nblocks).reshape(nblocks, 4)
        u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        r0 = np.sqrt(-2.0 * np.log(u[:, 0]))
        r2 = np.sqrt(-2.0 * np.log(u[:, 2]))
        a1 = 2.0 * np.pi * u[:, 1]
        a3 = 2.0 * np.pi * u[:, 3]
        z = np.stack([r0 * np.cos(a1), r0 * np.sin(a1), r2 * np.cos(a3), r2 * np.sin(a3)], axis=1)
        offset = start - 4 * first_block
        return z.reshape(-1)[offset : offset + count]

    def normal(self, replica: int, counter: int) -> float:
        return float(self.normals(replica, counter, 1)[0])
