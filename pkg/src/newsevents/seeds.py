"""Deterministic seed derivation.

One root seed drives the whole pipeline. Every randomized stage derives its
own seed by folding string/int labels into a splitmix64 stream, so adding a
stage never perturbs the seeds of existing ones.
"""

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """One step of the splitmix64 generator; returns the mixed output."""
    z = (state + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(root: int, *labels) -> int:
    """Derive a 63-bit seed from a root seed and a label path.

    Labels may be ints or strings; strings are folded byte-chunk-wise so the
    derivation is stable across runs and platforms.
    """
    x = root & _MASK
    for label in labels:
        if isinstance(label, str):
            data = label.encode("utf-8")
            for i in range(0, len(data), 8):
                chunk = int.from_bytes(data[i : i + 8], "little")
                x = splitmix64(x ^ chunk)
        elif isinstance(label, int):
            x = splitmix64(x ^ (label & _MASK))
        else:
            raise TypeError(f"seed labels must be str or int, got {type(label)!r}")
        x = splitmix64(x)
    # numpy seeds must fit in 63 bits
    return x >> 1
