"""Eigendecomposition of the graph Laplacian in the measure-weighted inner
product, heat kernel and heat semigroup."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .graph import Graph, as_function

# Eigenvalues below ZERO_EIGENVALUE_REL * max(1, lambda_max) count as zero.
# Needed so that lambda**s at small s does not amplify eigensolver noise.
ZERO_EIGENVALUE_REL = 1e-10


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs (lambda_i, phi_i) of the positive Laplacian, mu-orthonormal.

    lambdas are ascending with lambdas[0] == 0 on a connected graph; column i
    of ``phis`` is the eigenfunction phi_i. Orthonormality is with respect to
    the measure-weighted inner product, so ``phis.T @ diag(mu) @ phis == I``.
    """

    graph: Graph
    lambdas: np.ndarray
    phis: np.ndarray

    @property
    def n(self):
        return self.graph.n

    def coefficients(self, u):
        """Expansion coefficients <u, phi_i> in the mu-inner product."""
        u = as_function(self.graph, u)
        return self.phis.T @ (self.graph.mu * u)

    def synthesize(self, coeffs):
        return self.phis @ np.asarray(coeffs, dtype=float)

    def power_matrix(self, s):
        """Dense matrix of the spectral power: Phi diag(lambda^s) Phi^{-1}.

        ``lambda**s`` is taken as 0 at lambda == 0 for every s > 0.
        """
        lam = self.lambdas
        pow_lam = np.where(lam > 0, lam, 1.0) ** float(s)
        pow_lam = np.where(lam > 0, pow_lam, 0.0)
        phi_inv = self.phis.T * self.graph.mu[None, :]
        return (self.phis * pow_lam[None, :]) @ phi_inv


def decompose(g):
    """Solve the mu-weighted eigenproblem for the positive Laplacian.

    Uses the symmetric similarity transform S = U^{1/2} L U^{-1/2}, which has
    the same spectrum as L and orthonormal eigenvectors q_i; the mu-orthonormal
    eigenfunctions are phi_i = U^{-1/2} q_i. Sign convention: the first
    non-negligible entry of each eigenfunction is positive. Degenerate
    eigenspaces come back as an arbitrary mu-orthonormal basis.
    """
    d = g.weights.sum(axis=1)
    root_mu = np.sqrt(g.mu)
    sym = (np.diag(d) - g.weights) / root_mu[:, None] / root_mu[None, :]
    sym = 0.5 * (sym + sym.T)
    try:
        lam, q = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc

    lam = np.where(lam < ZERO_EIGENVALUE_REL * max(1.0, float(lam[-1])), 0.0, lam)
    phis = q / root_mu[:, None]

    # fix signs: first entry of each column that is clearly nonzero goes positive
    for i in range(phis.shape[1]):
        col = phis[:, i]
        nz = np.nonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))[0]
        if nz.size and col[nz[0]] < 0:
            phis[:, i] = -col

    lam.setflags(write=False)
    phis.setflags(write=False)
    return SpectralDecomposition(graph=g, lambdas=lam, phis=phis)


def heat_kernel(sd, t):
    """Heat kernel p(t, x, y) = sum_i exp(-lambda_i t) phi_i(x) phi_i(y).

    Symmetrized assembly, so p(t, x, y) == p(t, y, x) exactly as stored.
    """
    t = float(t)
    if t < 0:
        raise ValueError("time t must be nonnegative")
    decay = np.exp(-sd.lambdas * t)
    p = (sd.phis * decay[None, :]) @ sd.phis.T
    return 0.5 * (p + p.T)


def heat_apply(sd, t, u0):
    """Evolve u0 under the heat semigroup for time t.

    Returns the unique bounded solution of du/dt = Delta u at time t with
    initial data u0. Constants are preserved and mass is conserved.
    """
    t = float(t)
    if t < 0:
        raise ValueError("time t must be nonnegative")
    u0 = as_function(sd.graph, u0)
    if t == 0.0:
        return u0.copy()
    coeffs = sd.coefficients(u0) * np.exp(-sd.lambdas * t)
    return sd.synthesize(coeffs)
