"""Ground-truth optimal values over the full finite support, cached on disk."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import NumericalFailure
from ..model import TwoStageInstance, solve_extensive_form
from ..sequential import expected_recourse

CACHE_ENV = "SEQSAA_CACHE"
AGREE_TOL = 1e-8


@dataclass
class GroundTruth:
    z_star: float
    x_star: np.ndarray
    primal: float
    dual: float
    support: tuple  # (ScenarioSet, probs)

    def gap(self, instance: TwoStageInstance, x) -> float:
        return expected_recourse(instance, x, self.support) - self.z_star


def cache_dir() -> Path:
    root = os.environ.get(CACHE_ENV)
    return Path(root) if root else Path.home() / ".cache" / "seqsaa"


def _agree(a: float, b: float) -> bool:
    return abs(a - b) <= AGREE_TOL * (1.0 + abs(a))


def ground_truth(instance: TwoStageInstance, use_cache: bool = True, directory=None) -> GroundTruth:
    """Optimal value ``z*`` of the full-support problem.

    The cache entry is keyed by the instance fingerprint.  On reload the
    stored primal and dual objectives must agree, and ``c'x* + q(x*)`` is
    recomputed, which must reproduce ``z*``.
    """
    support = instance.model.enumerate_support()
    path = Path(directory or cache_dir()) / f"truth-{instance.fingerprint()}.json"
    if use_cache and path.exists():
        try:
            data = json.loads(path.read_text())
            x = np.array(data["x_star"])
            ok = _agree(data["primal"], data["dual"]) and _agree(
                expected_recourse(instance, x, support), data["z_star"]
            )
        except (OSError, ValueError, KeyError):
            ok = False
        if ok:
            return GroundTruth(data["z_star"], x, data["primal"], data["dual"], support)
    z, x, sol, lp = solve_extensive_form(instance, *support)
    dual = sol.dual_objective(lp)
    if not _agree(z, dual):
        raise NumericalFailure(f"extensive form primal {z!r} and dual {dual!r} disagree")
    z_eval = expected_recourse(instance, x, support)
    if not math.isclose(z_eval, z, rel_tol=1e-7, abs_tol=1e-7):
        raise NumericalFailure(f"extensive form value {z!r} does not match recourse evaluation {z_eval!r}")
    if use_cache:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps({"z_star": z, "x_star": x.tolist(), "primal": z, "dual": dual}))
            tmp.replace(path)
        except OSError:
            pass
    return GroundTruth(z, x, z, dual, support)
