"""Delimited and JSON outputs.  Floats are written with 17 significant digits."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ode_engine import RadialProfile, dense_samples, f_density

PROFILE_HEADER = ("s", "r", "u", "u_s", "f_density")
BRANCH_HEADER = ("mu", "log_lambda_mu", "lambda_mu", "Lambda", "E_value", "energy_identity_gap")
DECOMPOSITION_HEADER = ("r", "eta_num", "eta0", "w_num", "w", "phi_res")
QUANTIZATION_HEADER = ("R", "P", "bubble_pred", "tail_bound")


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, rows), encoding="utf-8")
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    header = text[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:]])
    return header, data


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def json_text(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json_text(obj), encoding="utf-8")
    return path


def profile_rows(p: RadialProfile, per_segment: int = 4):
    d = dense_samples(p, per_segment)
    s, u, us = d[:, 0], d[:, 1], d[:, 2]
    dens = f_density(np.maximum(u, 0.0), p.mu)
    return zip(s, np.exp(s), u, us, dens)


def branch_rows(curve):
    for pt in curve.points:
        yield (pt.mu, pt.log_lambda_mu, pt.lambda_mu, pt.dirichlet_energy, pt.mt_value,
               pt.energy_identity_gap)


def decomposition_rows(dec):
    return zip(dec.r_grid, dec.eta_num, dec.eta0_vals, dec.w_num, dec.w_vals, dec.phi_res)


def quantization_rows(q):
    return zip(q.R_grid, q.P_vals, q.bubble_prediction, q.tail_bound)
