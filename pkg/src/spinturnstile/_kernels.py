"""Hot inner loops with a numba backend and a pure-numpy fallback.

The only loop in the package whose iteration count grows with the shot budget
is the back-action chain: applying the conditional instrument maps cycle by
cycle for up to millions of cycles. That loop lives here, compiled with
``numba.njit`` when available. Set the environment variable
``SPINTURNSTILE_NO_NUMBA=1`` (before import) to force the pure-numpy path;
the two backends run the identical algorithm on identical pre-drawn uniform
variates, so they produce the same outcome sequences.

``benchmarks/bench_chain.py`` compares the two implementations.
"""

import os

import numpy as np

__all__ = ["run_chain", "run_chain_numpy", "run_chain_numba", "BACKEND"]

_DISABLED = os.environ.get("SPINTURNSTILE_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


def _chain_impl(kraus_pulse, kraus_nopulse, rho0, uniforms, outcomes, probs, rho):
    """Sequential conditional-state propagation; nopython-compatible.

    Per cycle: form the unnormalized pulse branch ``sum_k K rho K^dag``, read
    its trace as the pulse probability, draw the outcome against the supplied
    uniform variate, and renormalize the selected branch into the next state.
    All scratch arrays are allocated by the wrapper so this body stays free
    of per-call allocation.
    """
    n = uniforms.shape[0]
    d = rho0.shape[0]
    kp = kraus_pulse.shape[0]
    kn = kraus_nopulse.shape[0]
    sigma = np.empty((d, d), np.complex128)
    tmp = np.empty((d, d), np.complex128)
    for r in range(d):
        for s in range(d):
            rho[r, s] = rho0[r, s]
    for i in range(n):
        for r in range(d):
            for s in range(d):
                sigma[r, s] = 0.0
        for k in range(kp):
            for r in range(d):
                for s in range(d):
                    acc = 0.0 + 0.0j
                    for m in range(d):
                        acc += kraus_pulse[k, r, m] * rho[m, s]
                    tmp[r, s] = acc
            for r in range(d):
                for s in range(d):
                    acc = 0.0 + 0.0j
                    for m in range(d):
                        acc += tmp[r, m] * np.conj(kraus_pulse[k, s, m])
                    sigma[r, s] += acc
        p_pulse = 0.0
        for r in range(d):
            p_pulse += sigma[r, r].real
        if p_pulse < 0.0:
            p_pulse = 0.0
        elif p_pulse > 1.0:
            p_pulse = 1.0
        probs[i] = p_pulse
        if uniforms[i] < p_pulse:
            outcomes[i] = 1
            inv = 1.0 / p_pulse
            for r in range(d):
                for s in range(d):
                    rho[r, s] = sigma[r, s] * inv
        else:
            outcomes[i] = 0
            for r in range(d):
                for s in range(d):
                    sigma[r, s] = 0.0
            for k in range(kn):
                for r in range(d):
                    for s in range(d):
                        acc = 0.0 + 0.0j
                        for m in range(d):
                            acc += kraus_nopulse[k, r, m] * rho[m, s]
                        tmp[r, s] = acc
                for r in range(d):
                    for s in range(d):
                        acc = 0.0 + 0.0j
                        for m in range(d):
                            acc += tmp[r, m] * np.conj(kraus_nopulse[k, s, m])
                        sigma[r, s] += acc
            p_no = 0.0
            for r in range(d):
                p_no += sigma[r, r].real
            if p_no <= 0.0:
                # Unreachable for a valid instrument; keep the chain alive.
                for r in range(d):
                    for s in range(d):
                        rho[r, s] = 1.0 / d if r == s else 0.0
            else:
                inv = 1.0 / p_no
                for r in range(d):
                    for s in range(d):
                        rho[r, s] = sigma[r, s] * inv


def _prepare(kraus_pulse, kraus_nopulse, rho0, uniforms):
    kp = np.ascontiguousarray(kraus_pulse, dtype=np.complex128)
    kn = np.ascontiguousarray(kraus_nopulse, dtype=np.complex128)
    r0 = np.ascontiguousarray(rho0, dtype=np.complex128)
    u = np.ascontiguousarray(uniforms, dtype=np.float64)
    n = u.shape[0]
    d = r0.shape[0]
    outcomes = np.zeros(n, dtype=np.uint8)
    probs = np.empty(n, dtype=np.float64)
    rho = np.empty((d, d), dtype=np.complex128)
    return kp, kn, r0, u, outcomes, probs, rho


def run_chain_numpy(kraus_pulse, kraus_nopulse, rho0, uniforms):
    """Pure-numpy backend (vectorized over Kraus operators per cycle)."""
    kp, kn, r0, u, outcomes, probs, rho = _prepare(kraus_pulse, kraus_nopulse, rho0, uniforms)
    d = r0.shape[0]
    rho[:] = r0
    kp_dag = kp.conj().transpose(0, 2, 1)
    kn_dag = kn.conj().transpose(0, 2, 1)
    for i in range(u.shape[0]):
        sigma = np.einsum("kij,jl,klm->im", kp, rho, kp_dag, optimize=False)
        p_pulse = min(max(float(np.trace(sigma).real), 0.0), 1.0)
        probs[i] = p_pulse
        if u[i] < p_pulse:
            outcomes[i] = 1
            rho[:] = sigma / p_pulse
        else:
            sigma = np.einsum("kij,jl,klm->im", kn, rho, kn_dag, optimize=False)
            p_no = float(np.trace(sigma).real)
            if p_no <= 0.0:
                rho[:] = np.eye(d) / d
            else:
                rho[:] = sigma / p_no
    return outcomes, probs, rho


_chain_jit = None
if not _DISABLED:
    try:
        import numba

        _chain_jit = numba.njit(cache=True)(_chain_impl)
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _chain_jit = None

BACKEND = "numba" if _chain_jit is not None else "numpy"


def run_chain_numba(kraus_pulse, kraus_nopulse, rho0, uniforms):
    """Numba backend; raises RuntimeError when numba is unavailable/disabled."""
    if _chain_jit is None:
        raise RuntimeError("numba backend unavailable (not installed or disabled by env flag)")
    kp, kn, r0, u, outcomes, probs, rho = _prepare(kraus_pulse, kraus_nopulse, rho0, uniforms)
    _chain_jit(kp, kn, r0, u, outcomes, probs, rho)
    return outcomes, probs, rho


def run_chain(kraus_pulse, kraus_nopulse, rho0, uniforms):
    """Propagate a conditional measurement chain with the selected backend.

    Args:
        kraus_pulse: (k, d, d) Kraus operators of the pulse branch.
        kraus_nopulse: (k', d, d) Kraus operators of the no-pulse branch.
        rho0: initial d x d gate state.
        uniforms: pre-drawn uniform [0, 1) variates, one per cycle. Drawing
            them outside the kernel keeps the outcome sequence independent of
            the backend.

    Returns:
        ``(outcomes, probs, rho_final)``: per-cycle outcome bits (uint8),
        per-cycle pulse probabilities, and the final conditional gate state.
    """
    if BACKEND == "numba":
        return run_chain_numba(kraus_pulse, kraus_nopulse, rho0, uniforms)
    return run_chain_numpy(kraus_pulse, kraus_nopulse, rho0, uniforms)
