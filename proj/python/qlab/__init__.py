"""Python bindings for the qlab quenched-limit toolkit.

Models are passed as dicts (the model JSON schema) or as paths to model files.
"""

import json
import os

from ._qlab import (  # noqa: F401
    HannanRefusal,
    InvalidModel,
    __version__,
    list_experiments,
    philox4x32,
    uniforms,
)
from . import _qlab


def _text(model):
    if isinstance(model, (str, os.PathLike)) and os.path.exists(model):
        with open(model, encoding="utf-8") as fh:
            return fh.read()
    if isinstance(model, dict):
        return json.dumps(model)
    return str(model)


def load_model(model):
    """Validated model definition with the computed stationary law."""
    return json.loads(_qlab._model_json(_text(model)))


def model_digest(model):
    return _qlab._model_digest(_text(model))


def sigma_squared(model):
    return _qlab._sigma_squared(_text(model))


def projection_norms(model, horizon=None):
    """(norms, bias) for k = 0..horizon."""
    return _qlab._projection_norms(_text(model), horizon)


def hannan_verdict(model):
    """(verdict, partial sum)."""
    return _qlab._hannan_verdict(_text(model))


def poisson_solution(model):
    """g_hat for chains; [c] with c = sum a_k for linear models."""
    return _qlab._g_hat(_text(model))


def markov_property_discrepancy(model, n_max=3):
    return _qlab._markov_discrepancy(_text(model), n_max)


def run(config, out_dir, base_dir=".", workers=1):
    """Run one experiment. Returns (exit_code, message, report dict or None)."""
    code, message, report = _qlab._run(json.dumps(config), str(base_dir), str(out_dir), workers)
    return code, message, (json.loads(report) if report != "null" else None)
