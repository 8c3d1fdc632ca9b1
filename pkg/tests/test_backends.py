"""The numba kernels and the pure-numpy fallback must agree."""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from cspath import _jit

PROBE = r"""
import json, numpy as np
from cspath import _jit, _kernels as K
from cspath.core import random_smooth
from cspath.green import trace_gn, green_kernel, ds_dlambda
from cspath.oracles import DiscretePIConfig, discrete_path_integral
from cspath.propagator import evolve

H = random_smooth(7, 1.0, seed=3, b_scale=1.0)
S = evolve(H, steps=256)
tg = trace_gn(green_kernel(H, 0.7, steps=256))
ds = ds_dlambda(H, 0.7, steps=256)
pi = discrete_path_integral(random_smooth(2, 1.0, 4), 1.0, [0.3, 0.1j], [0.2, -0.1], DiscretePIConfig(256))

def enc(z):
    z = np.atleast_1d(np.asarray(z, complex)).ravel()
    return [z.real.tolist(), z.imag.tolist()]

print(json.dumps({"backend": _jit.backend(), "alpha": enc(S.alpha), "beta": enc(S.beta),
                  "logdet": enc(S.logdet_abar), "trace": enc(tg), "dsym": enc(ds), "pi": enc(pi)}))
"""


def _probe(disable):
    env = dict(os.environ)
    env["CSPATH_DISABLE_NUMBA"] = "1" if disable else "0"
    res = subprocess.run([sys.executable, "-c", PROBE], env=env, capture_output=True, text=True, check=True)
    out = json.loads(res.stdout.strip().splitlines()[-1])
    return out.pop("backend"), {k: np.array(re) + 1j * np.array(im) for k, (re, im) in out.items()}


@pytest.mark.skipif(_jit.numba is None, reason="numba not installed")
def test_backends_agree():
    b_fast, fast = _probe(False)
    b_slow, slow = _probe(True)
    assert (b_fast, b_slow) == ("numba", "numpy")
    for key in fast:
        assert np.allclose(fast[key], slow[key], rtol=1e-12, atol=1e-12), key


def test_env_flag_parsing(monkeypatch):
    import importlib
    try:
        for value, disabled in (("1", True), ("yes", True), ("0", False), ("", False)):
            monkeypatch.setenv("CSPATH_DISABLE_NUMBA", value)
            assert importlib.reload(_jit).NUMBA_DISABLED is disabled
    finally:
        monkeypatch.undo()
        importlib.reload(_jit)
