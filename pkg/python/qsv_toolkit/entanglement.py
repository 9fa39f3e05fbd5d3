"""Entanglement detection from verification statistics.

A source whose states pass the MES strategy with frequency above the largest
pass probability of any separable state, 2/(d + 1), cannot be emitting
separable states; the Chernoff-Hoeffding bound gives the confidence.
"""

from typing import Iterable

import numpy as np
from scipy.optimize import minimize

from qsv_toolkit.qmath import (
    DERIVED_TOL,
    Operator,
    PureState,
    check_dims,
    kron_states,
    partial_trace,
    random_ket,
)
from qsv_toolkit.rng import RoundRandom
from qsv_toolkit.stats import chernoff_hoeffding_confidence

# RoundRandom stream used for product-state sampling.
PRODUCT_SAMPLING_STREAM = 1


def _require_maximally_entangled(target: PureState) -> int:
    if len(target.dims) != 2 or target.dims[0] != target.dims[1]:
        raise ValueError(f"Witness needs a d x d bipartite target, got dims {target.dims}")
    d = target.dims[0]
    reduced = partial_trace(target.projector(), [0]).matrix
    if not np.allclose(reduced, np.eye(d) / d, rtol=0.0, atol=DERIVED_TOL):
        raise ValueError("Target is not maximally entangled (reduced state is not 1/d)")
    return d


def witness_operator(target: PureState) -> Operator:
    """W = 1/d - |psi><psi|; Tr(W sigma) >= 0 for every separable sigma."""
    d = _require_maximally_entangled(target)
    return Operator.identity(target.dims) * (1.0 / d) - target.projector()


def witness_value(target: PureState, sigma: Operator) -> float:
    """Tr(W sigma); negative values certify entanglement."""
    return float(np.real(np.sum(witness_operator(target).matrix * sigma.matrix.T)))


def separable_pass_bound(d: int) -> float:
    """Largest pass probability of a separable state under the MES strategy."""
    if d < 2:
        raise ValueError(f"Local dimension must be at least 2, got {d}")
    return 2.0 / (d + 1)


def entanglement_confidence(f: float, q_s: float, n: int) -> float:
    """Upper bound exp(-D(f||q_s) N) on the probability that all states were separable.

    Raises:
        CannotRejectError: If f does not exceed q_s
    """
    return chernoff_hoeffding_confidence(f, q_s, n)


def sample_product_states(dims: Iterable[int], samples: int, seed: int) -> np.ndarray:
    """Haar-random product kets, one row per sample."""
    dims = check_dims(dims)
    random = RoundRandom(seed, stream=PRODUCT_SAMPLING_STREAM)
    rows = []
    for index in range(samples):
        rng = random.generator(index)
        state = random_ket((dims[0],), rng)
        for d in dims[1:]:
            state = kron_states(state, random_ket((d,), rng))
        rows.append(state.amplitudes)
    return np.array(rows)


def _product_vector(params: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    vector = np.ones(1, dtype=complex)
    offset = 0
    for d in dims:
        factor = params[offset : offset + d] + 1j * params[offset + d : offset + 2 * d]
        offset += 2 * d
        vector = np.kron(vector, factor)
    return vector


def _product_params(vector: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    """Split a product ket back into per-factor (real, imag) parameters."""
    tensor = vector.reshape(dims)
    params = []
    for axis, d in enumerate(dims):
        # Any nonzero slice through the other axes is proportional to the factor.
        moved = np.moveaxis(tensor, axis, 0).reshape(d, -1)
        column = moved[:, np.argmax(np.linalg.norm(moved, axis=0))]
        column = column / np.linalg.norm(column)
        params.extend([column.real, column.imag])
    return np.concatenate(params)


def max_product_pass_probability(
    omega: Operator, samples: int = 2000, seed: int = 0, refine: int = 5
) -> float:
    """Estimate max <phi|Omega|phi> over product kets |phi>.

    Samples Haar-random product kets, then locally refines the best `refine`
    candidates with BFGS. The result is a lower estimate of the true maximum.
    """
    if samples < 1:
        raise ValueError(f"Need at least one sample, got {samples}")
    dims = omega.dims
    candidates = sample_product_states(dims, samples, seed)
    values = np.real(np.einsum("si,ij,sj->s", candidates.conj(), omega.matrix, candidates))
    best = float(values.max())
    hermitian = (omega.matrix + omega.matrix.conj().T) / 2

    def objective(params: np.ndarray) -> float:
        vector = _product_vector(params, dims)
        norm = np.vdot(vector, vector).real
        return -float(np.vdot(vector, hermitian @ vector).real / norm)

    for index in np.argsort(values)[::-1][:refine]:
        result = minimize(objective, _product_params(candidates[index], dims), method="BFGS")
        if np.isfinite(result.fun):
            best = max(best, -float(result.fun))
    return best
