"""Backend selection and numpy/numba kernel agreement."""

import os
import subprocess
import sys

import numpy as np
import pytest

from qkdbounds import accel
from qkdbounds._kernels import gllp_rate_vector
from qkdbounds.channel import DetectorParams
from qkdbounds.optimizer import SweepSpec, optimize_lambdas
from qkdbounds.protocols import GLLP, ONE_DECOY, WEAK_VACUUM, ProtocolParams
from qkdbounds.source import SourceSpec

needs_numba = pytest.mark.skipif(
    not accel.numba_available(), reason="numba unavailable or disabled"
)


class TestResolveBackend:
    def test_default_is_valid_name(self):
        assert accel.resolve_backend(None) in (
            accel.NUMPY_BACKEND,
            accel.NUMBA_BACKEND,
        )

    def test_numpy_always_allowed(self):
        assert accel.resolve_backend("numpy") == "numpy"

    def test_unknown_rejected(self):
        with pytest.raises(ValueError):
            accel.resolve_backend("cuda")

    @needs_numba
    def test_numba_explicit(self):
        assert accel.resolve_backend("numba") == "numba"


class TestEnvFlag:
    def test_disable_via_env(self):
        code = (
            "from qkdbounds import accel; print(accel.default_backend())"
        )
        env = dict(os.environ, QKD_NO_NUMBA="1")
        out = subprocess.run(
            [sys.executable, "-c", code],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        assert out.stdout.strip() == "numpy"

    def test_zero_means_enabled(self):
        # "0" and "" both leave the default alone.
        code = (
            "from qkdbounds import accel; "
            "print(accel.default_backend() == accel.default_backend())"
        )
        env = dict(os.environ, QKD_NO_NUMBA="0")
        out = subprocess.run(
            [sys.executable, "-c", code],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        assert out.stdout.strip() == "True"


@needs_numba
class TestKernelAgreement:
    def test_gllp_vector(self):
        rng = np.random.default_rng(11)
        n = 512
        q_e = rng.uniform(1e-6, 0.5, n)
        e_e = rng.uniform(0.0, 0.5, n)
        p0l = rng.uniform(0.9, 0.999, n)
        p1u = rng.uniform(0.0, 0.05, n)
        a = gllp_rate_vector(q_e, e_e, p0l, p1u, 0.01, 0.985, 1.22, 0.5,
                             backend="numpy")
        b = gllp_rate_vector(q_e, e_e, p0l, p1u, 0.01, 0.985, 1.22, 0.5,
                             backend="numba")
        assert np.max(np.abs(a - b)) < 1e-10

    @pytest.mark.parametrize("protocol", [GLLP, WEAK_VACUUM, ONE_DECOY])
    def test_optimizer_end_to_end(self, protocol):
        source = SourceSpec(mean_photons=1e6)
        det = DetectorParams()
        params = ProtocolParams(
            protocol=protocol, lambda_signal=5e-7, lambda_decoy=2.5e-7
        )
        spec = SweepSpec(
            distances_km=(10.0,),
            protocol=params,
            points_per_decade=8,
            decades=2.0,
        )
        out = {}
        for backend in ("numpy", "numba"):
            lam_s, lam_d, report = optimize_lambdas(
                10.0, spec, source, det, backend=backend
            )
            out[backend] = (lam_s, lam_d, report.rate)
        assert out["numpy"][0] == out["numba"][0]
        assert out["numpy"][1] == out["numba"][1] or (
            np.isnan(out["numpy"][1]) and np.isnan(out["numba"][1])
        )
        assert out["numpy"][2] == pytest.approx(out["numba"][2], abs=1e-12)
