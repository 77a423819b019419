import numpy as np

SEED_LIMIT = 2**64


def step_generator(seed: int, block: int, step: int) -> np.random.Generator:
    """
    Counter-based stream for one simulation step of one path block.

    Philox is keyed by the campaign seed; the block and step indices occupy the
    high counter words, so draws within a step never reach another stream.
    """
    if not 0 <= seed < SEED_LIMIT:
        raise ValueError("seed must fit in 64 bits")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, step, block]))
