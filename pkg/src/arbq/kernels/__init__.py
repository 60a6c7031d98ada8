"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba implementation is used when numba imports cleanly, unless the
environment variable ``ARBQ_NO_NUMBA`` is set to a truthy value.  Both
backends expose the same functions:

``energy_table(lin, J, offset)``
    QUBO energy of every basis state; bit ``v`` of the index is variable ``v``.
``anneal(lin, J, temps, x0, thresholds)``
    Metropolis sweeps for a block of shots; returns the final states.
``apply_phase(psi, diag, gamma)`` / ``apply_mixer(psi, beta)``
    In-place QAOA layer updates on a complex statevector.
"""

import os

from . import _numpy

_FALSY = ("", "0", "false", "no", "off")

numba_available = False
try:
    from . import _numba

    numba_available = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

if numba_available and os.environ.get("ARBQ_NO_NUMBA", "").strip().lower() in _FALSY:
    _impl = _numba
    BACKEND = "numba"
else:
    _impl = _numpy
    BACKEND = "numpy"

energy_table = _impl.energy_table
anneal = _impl.anneal
apply_phase = _impl.apply_phase
apply_mixer = _impl.apply_mixer


def get_backend(name=None):
    """Return the kernel module for ``name`` (``"numba"``/``"numpy"``), default the active one."""
    if name is None:
        return _impl
    if name == "numpy":
        return _numpy
    if name == "numba":
        if not numba_available:
            raise RuntimeError("numba backend requested but numba is not importable")
        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")
