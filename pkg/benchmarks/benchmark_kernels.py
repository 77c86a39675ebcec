"""Timing comparison for the grid-rate kernels: compiled vs pure numpy.

Run from the repository root:

    python3 benchmarks/benchmark_kernels.py

Every backend pair is checked for agreement below 1e-10 before timings are
reported, so a speedup never comes from computing something different.
Set QKD_NO_NUMBA=1 to confirm the numpy-only path works on its own.
"""

from __future__ import annotations

import time

import numpy as np

from qkdbounds import DetectorParams, SourceSpec, SweepSpec, ProtocolParams
from qkdbounds import GLLP, WEAK_VACUUM, ONE_DECOY
from qkdbounds.accel import NUMBA_BACKEND, NUMPY_BACKEND, numba_available
from qkdbounds.optimizer import (
    _untrusted_grid_rates,
    build_window,
    lambda_grid,
)

REPEATS = 7
DISTANCE_KM = 50.0


def _time(fn) -> float:
    best = float("inf")
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    source = SourceSpec(mean_photons=1.0e6)
    detector = DetectorParams()
    print(f"distance {DISTANCE_KM} km, N = {source.mean_photons:g}")
    print(f"numba available: {numba_available()}")
    print()

    for name, protocol, ppd in (
        ("gllp vector", GLLP, 200),
        ("weak+vacuum matrix", WEAK_VACUUM, 40),
        ("one-decoy matrix", ONE_DECOY, 40),
    ):
        params = ProtocolParams(
            protocol=protocol, lambda_signal=0.5, lambda_decoy=0.25
        )
        spec = SweepSpec(
            distances_km=(DISTANCE_KM,), protocol=params, points_per_decade=ppd
        )
        delta = spec.delta_grid[0]
        window = build_window(source, delta)
        grid = lambda_grid(spec, source, delta)

        def run(backend: str):
            return _untrusted_grid_rates(
                DISTANCE_KM, spec, source, detector, window, grid, backend=backend
            )

        ref = run(NUMPY_BACKEND)
        shape = "x".join(str(s) for s in ref.shape)
        t_numpy = _time(lambda: run(NUMPY_BACKEND))
        line = f"{name:<22} grid {shape:>9}  numpy {t_numpy * 1e3:8.2f} ms"
        if numba_available():
            fast = run(NUMBA_BACKEND)  # warm compile before timing
            finite = np.isfinite(ref) & np.isfinite(fast)
            if not np.array_equal(np.isfinite(ref), np.isfinite(fast)):
                raise AssertionError(f"{name}: backends disagree on feasibility")
            worst = (
                float(np.max(np.abs(ref[finite] - fast[finite])))
                if finite.any()
                else 0.0
            )
            if worst >= 1e-10:
                raise AssertionError(f"{name}: backend mismatch {worst:.3e}")
            t_numba = _time(lambda: run(NUMBA_BACKEND))
            line += (
                f"  numba {t_numba * 1e3:8.2f} ms"
                f"  speedup {t_numpy / t_numba:6.2f}x  max|diff| {worst:.2e}"
            )
        print(line)


if __name__ == "__main__":
    main()
