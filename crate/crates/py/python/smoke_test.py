"""Smoke test for the compiled extension.

Build and run from the repository root:

    cargo build --release -p nonlocal-mp-py --features extension-module
    cp target/release/libnonlocal_mp_py.so crates/py/python/nonlocal_mp_py.so
    python3 crates/py/python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import nonlocal_mp_py as nm


def main():
    assert abs(nm.kernel_constant(1, 0.5) - 1.0 / math.pi) < 1e-12
    assert abs(nm.kernel_constant(2, 0.5) - 1.0 / (2.0 * math.pi)) < 1e-12
    assert nm.bar_p_exponent(1, 0.5) > 1.0

    lo, h, n = -2.0, 1.0 / 64.0, 257
    xs = [lo + i * h for i in range(n)]
    bump = [max(0.0, 1.0 - x * x / 0.36) ** 3 for x in xs]
    op = nm.apply_operator(bump, lo, h, 0.5, [0.0, 1.5])
    assert op[0] > 0.0, op
    assert op[1] < 0.0, op

    value, err = nm.energy(bump, lo, h, 0.5, -1.0, 1.0)
    assert value > 0.0 and err >= 0.0

    k = nm.killing_measure(0.0, -1.0, 1.0, 0.5)
    assert abs(k - 2.0 / math.pi) < 1e-6, k

    blo, bh, phi = nm.build_barrier(0.0, 0.25, 1.0, 0.5)
    assert len(phi) > 2 and max(phi) <= 1.0 + 1e-12

    mc = nm.killing_rate_crosscheck(0.0, -1.0, 1.0, 0.5, 20000, 3)
    assert abs(mc["mc_rate"] - mc["quadrature_rate"]) < 4.0 * mc["mc_stderr"] + 1e-3, mc

    try:
        nm.kernel_constant(1, 1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("s = 1.5 accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
