"""Frozen model constants and the integerized log conventions.

Every bound checked by the harness uses exact integer or rational arithmetic.
Logarithms are integerized once, here, and used consistently everywhere:
``log2_ceil(n)`` for base-2 terms and ``ln_ceil(n)`` for natural-log terms.

The ``C_*`` comparison constants were calibrated by running the acceptance
suite once, rounding the worst observed ratio up with headroom, and freezing
the result.  They are deliberately loose: the point of a bound check is to
catch regressions in the measured round counts, not to flatter them.
"""

from __future__ import annotations

import math


def log2_ceil(n: int) -> int:
    """ceil(log2 n) for n >= 1; 0 for n = 1."""
    if n < 1:
        raise ValueError("log of non-positive value")
    return (n - 1).bit_length()


def ln_ceil(n: int) -> int:
    """ceil(ln n) for n >= 1, never below 1 so it is safe as a divisor."""
    if n < 1:
        raise ValueError("log of non-positive value")
    if n == 1:
        return 1
    return max(1, math.ceil(math.log(n)))


def sqrt_ceil(n: int) -> int:
    s = math.isqrt(n)
    return s if s * s == n else s + 1


DEFAULT_CONSTANTS = {
    # Structural constants of the model and schedulers.
    "c_route": 2,   # rounds charged per ceil(X/n) unit by the bounded-routing primitive
    "c_bal": 5,     # balancedness: at most c_bal buckets (hence c_bal*t nodes) per machine
    "c_io": 4,      # I/O efficiency: input/output buffers hold at most c_io*n words
    "c_shuf_m": 3,  # shuffle per-phase load bound, traffic term
    "c_shuf_log": 10,  # shuffle per-phase load bound, concentration term
    "c_del": 21,    # delay per-phase load bound multiplier ( = 3 * (1 + 2*3) )
    "c_wrap": 4,    # MIS wrap-up is flagged as an outlier above c_wrap*n edges
    "c_ball": 1,    # MIS locally-simulated rounds = c_ball * ceil(log2 max-degree)
    # Calibrated comparison constants (see module docstring).  The comment on
    # each line records the worst ratio seen in the calibration sweep.
    "C_det": 40,        # worst 28.5 (hot-machine broadcast, n=64)
    "C_shuf": 30,       # worst 20.7 (mixed sets, n<=64, 45 seeds)
    "C_delay": 80,      # worst 41.0 (mixed sets; random delays add variance)
    "C_doubling": 20,   # worst 6.5; a borderline guess can add one attempt
    "C_mis_msg": 80,    # worst 34.6 over 204 random graphs, n in {32, 64}
    "C_mis_amort": 200, # worst 134.0 (n=32, t=12 batch, p=0.2)
    "C_pj_rounds": 10,  # worst 6.7 (n=8, where ceil(log2 n) is tiny)
    "C_pj_msg": 2,      # worst 0.98: message count tracks P*n almost exactly
    "C_pj_det": 55,     # worst 35.3 (n=8, single job)
    "C_pj_shuf": 50,    # worst 33.4 (n=8, single job)
    "C_hist_amort": 3,
    # Additive slack applied by every round-bound check.
    "C_add": 10,
    # Safety valve: abort any schedule that exceeds this many protocol rounds.
    "max_protocol_rounds": 1 << 20,
}


def merged_constants(overrides=None) -> dict:
    out = dict(DEFAULT_CONSTANTS)
    if overrides:
        unknown = set(overrides) - set(DEFAULT_CONSTANTS)
        if unknown:
            raise ValueError("unknown constants: %s" % ", ".join(sorted(unknown)))
        out.update(overrides)
    return out
