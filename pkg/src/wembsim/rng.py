"""Portable seeded generator for reference sampling.

The algorithm is fixed so that draws can be replayed by any implementation:

* state initialisation: ``state = splitmix64(seed)`` (a zero result is
  replaced by the splitmix64 golden-ratio increment, since xorshift must not
  start at zero);
* output: xorshift64* with shifts (12, 25, 27) and multiplier
  ``0x2545F4914F6CDD1D``;
* ``below(n)``: unbiased integer in ``[0, n)`` by rejecting outputs at or
  above the largest multiple of ``n`` below 2**64, then taking ``x % n``;
* ``sample(pool, k)``: the first ``k`` steps of a forward Fisher-Yates
  shuffle over a copy of ``pool``; position ``i`` swaps with
  ``i + below(len(pool) - i)``.
"""

from typing import List, Sequence, TypeVar

T = TypeVar("T")

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int = 42):
        state = splitmix64(seed & _MASK)
        self.state = state or _GOLDEN

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - (1 << 64) % n
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def sample(self, pool: Sequence[T], k: int) -> List[T]:
        """``k`` distinct items of ``pool`` drawn without replacement."""
        if not 0 <= k <= len(pool):
            raise ValueError(f"cannot draw {k} items from a pool of {len(pool)}")
        items = list(pool)
        for i in range(k):
            j = i + self.below(len(items) - i)
            items[i], items[j] = items[j], items[i]
        return items[:k]
