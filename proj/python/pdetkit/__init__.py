"""Log-determinants of the form logdet(A) + logdet(X^T A^-1 X), pseudo-determinants
of the singular-Woodbury matrix, and Gaussian-process likelihoods on X^perp."""

from ._core import (
    PdetkitError,
    complexity_model,
    kernel_cokernel,
    load_dmx,
    loglike_prior,
    loglike_singular,
    logdet,
    m_matrix,
    neumann_precision,
    pdet,
    pdet_m,
    pinv,
    precision,
    save_dmx,
)

__all__ = [
    "PdetkitError",
    "complexity_model",
    "kernel_cokernel",
    "load_dmx",
    "loglike_prior",
    "loglike_singular",
    "logdet",
    "m_matrix",
    "neumann_precision",
    "pdet",
    "pdet_m",
    "pinv",
    "precision",
    "save_dmx",
]
