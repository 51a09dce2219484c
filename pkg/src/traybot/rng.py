"""SplitMix64, kept as a bare integer state so worlds stay plain values."""

MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """Return (new_state, output) for one SplitMix64 draw."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def next_unit(state: int) -> tuple[int, float]:
    """Uniform double in [0, 1) from the top 53 bits of one draw."""
    state, z = splitmix64(state)
    return state, (z >> 11) * (1.0 / (1 << 53))
