"""Artifact writers: CSV tables and JSON reports.

Numbers are always formatted with 17 significant digits and a ``.``
decimal separator so that identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json

import numpy as np

from .fields import nodal_gradient


def fmt(value):
    return "%.17g" % float(value)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_field_csv(path, field):
    """Vertex table x,y,u,ux,uy with area-averaged nodal gradients."""
    grads = nodal_gradient(field)
    rows = np.column_stack([field.mesh.vertices, field.values, grads])
    _write_rows(path, ["x", "y", "u", "ux", "uy"], rows)


def write_profile_csv(path, profile):
    rows = np.column_stack([profile.grid, profile.w, profile.w_prime])
    _write_rows(path, ["rho", "w", "w_prime"], rows)


def write_wulff_csv(path, shape):
    rows = np.column_stack([shape.thetas, shape.boundary])
    _write_rows(path, ["theta", "x", "y"], rows)


def write_study_csv(path, rows):
    header = ["h", "hessian_integral", "weight_integral", "critical_fraction"]
    _write_rows(path, header, [[row[k] for k in header] for row in rows])


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_sha256(raw_bytes):
    return hashlib.sha256(raw_bytes).hexdigest()
