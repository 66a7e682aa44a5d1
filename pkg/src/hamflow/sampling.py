"""Seeded sampling of admissible points in a box."""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np

from . import expr as ex
from .errors import EvalDomainError
from .expr import Expr

SEED_ENV = "HAMFLOW_SEED"
DEFAULT_SEED = 20240601


def make_rng(seed: int | None = None) -> np.random.Generator:
    """PCG64 generator; falls back to ``$HAMFLOW_SEED`` and then a fixed seed."""
    if seed is None:
        env = os.environ.get(SEED_ENV)
        seed = int(env) if env else DEFAULT_SEED
    return np.random.default_rng(seed)


def sample_box(rng: np.random.Generator, n: int,
               box: Sequence[Sequence[float]] = ((-1, 1), (-1, 1), (-1, 1)),
               exclude: Sequence[Expr | str] = (), eps: float = 1e-3,
               max_tries: int = 10_000) -> np.ndarray:
    """Draw ``n`` points uniformly from ``box`` rejecting ``|g(p)| < eps``.

    Each ``g`` in ``exclude`` describes a degeneracy locus ``g = 0``.
    """
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    guards = [ex.as_expr(g) for g in exclude]
    out = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(f"could not draw {n} admissible points in {max_tries} tries")
        p = lo + (hi - lo) * rng.random(3)
        ok = True
        for g in guards:
            try:
                if abs(ex.evaluate(g, p)) < eps:
                    ok = False
                    break
            except EvalDomainError:
                ok = False
                break
        if ok:
            out.append(p)
    return np.array(out)
