"""Command-line front end.

Commands share one JSON config schema (see config.DEFAULTS) and write
their artifacts plus a manifest.json (config hash, seed, admissibility
verdicts, artifact list) into --out.  Exit status: 0 on success, 1 for
configuration or admissibility rejections (single-line diagnostic), 2
for numeric failures with whatever partial artifacts were produced
retained and flagged in the manifest.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import (build_domain_spec, build_material, build_norm, build_solve_options,
                     build_source, load_config, parse_overrides)
from .errors import AdmissibilityError, ConfigError, NonconvergenceError, NumericError
from .finsler import ellipticity_constant, verify_duality_identities, wulff_boundary
from .io import (config_sha256, write_field_csv, write_json, write_profile_csv,
                 write_study_csv, write_wulff_csv)
from .material import admissibility_report, check_source_signs
from .mesh import build_domain
from .radial import RadialProblem, shoot
from .solver import solve
from .verify import refinement_study


def _cmd_solve(cfg, material, norm, source, out, manifest):
    mesh = build_domain(build_domain_spec(cfg, norm), cfg["h"])
    try:
        field, report = solve(mesh, material, norm, source,
                              options=build_solve_options(cfg))
    except NonconvergenceError as exc:
        if exc.last_iterate is not None:
            _emit(out, manifest, "field.csv", write_field_csv, exc.last_iterate)
        if exc.report is not None:
            _emit(out, manifest, "solve_report.json", write_json, exc.report.to_dict())
        raise
    _emit(out, manifest, "field.csv", write_field_csv, field)
    _emit(out, manifest, "solve_report.json", write_json, report.to_dict())


def _cmd_barrier(cfg, material, norm, source, out, manifest):
    rad = cfg["radial"]
    problem = RadialProblem(material, source, radius=float(rad["radius"]),
                            mode=rad["mode"], n=int(rad["n"]))
    target = float(rad["m"] if rad["mode"] == "barrier" else rad["target"])
    profile = shoot(problem, target)
    _emit(out, manifest, "profile.csv", write_profile_csv, profile)


def _cmd_wulff(cfg, material, norm, source, out, manifest):
    wul = cfg["wulff"]
    shape = wulff_boundary(norm, radius=float(wul["radius"]),
                           n_samples=int(wul["samples"]), norm_side=wul["side"])
    _emit(out, manifest, "wulff.csv", write_wulff_csv, shape)


def _cmd_verify(cfg, material, norm, source, out, manifest):
    rng = np.random.default_rng(cfg["seed"])
    payload = dict(manifest["admissibility"])
    payload["duality_residual"] = verify_duality_identities(
        norm, samples=rng.standard_normal((100, norm.dim)))
    _emit(out, manifest, "admissibility.json", write_json, payload)


def _cmd_regularity(cfg, material, norm, source, out, manifest):
    ver = cfg["verify"]
    hopf = ver.get("hopf")
    hopf_pair = (float(hopf["radius"]), float(hopf["m"])) if hopf else None
    result = refinement_study(
        build_domain_spec(cfg, norm), material, norm, source,
        h_coarsest=float(cfg["h"]), levels=int(ver["levels"]),
        beta=float(ver["beta"]), gamma=float(ver["gamma"]), t=float(ver["t"]),
        q_grid=tuple(ver["q_grid"]), hopf=hopf_pair,
        options=build_solve_options(cfg))
    _emit(out, manifest, "study.csv", write_study_csv, result.rows)
    _emit(out, manifest, "regularity_report.json", write_json,
          result.regularity.to_dict())
    if result.hopf is not None:
        _emit(out, manifest, "hopf_report.json", write_json, result.hopf.to_dict())
    _emit(out, manifest, "field.csv", write_field_csv, result.fields[-1])


def _emit(out, manifest, name, writer, payload):
    writer(os.path.join(out, name), payload)
    manifest["artifacts"].append(name)


_COMMANDS = {
    "solve": _cmd_solve,
    "barrier": _cmd_barrier,
    "wulff": _cmd_wulff,
    "verify": _cmd_verify,
    "regularity": _cmd_regularity,
}


def _parser():
    parser = argparse.ArgumentParser(
        prog="finslerpde",
        description="Anisotropic quasilinear solver and estimate checker")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry by dotted path (repeatable)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the sampling seed (default: config value or 0)")
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg, raw = load_config(args.config, parse_overrides(args.set), args.seed)
        material = build_material(cfg)
        norm = build_norm(cfg)
        source = build_source(cfg)
        check_source_signs(source)
        admissibility = admissibility_report(material, norm, source,
                                             n_samples=2048, seed=cfg["seed"])
        admissibility["ellipticity"] = ellipticity_constant(norm, seed=cfg["seed"])
    except (ConfigError, AdmissibilityError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    os.makedirs(args.out, exist_ok=True)
    manifest = {
        "command": args.command,
        "config_sha256": config_sha256(raw),
        "seed": cfg["seed"],
        "admissibility": admissibility,
        "artifacts": [],
        "status": "ok",
    }
    code = 0
    try:
        _COMMANDS[args.command](cfg, material, norm, source, args.out, manifest)
    except (NumericError, ValueError) as exc:
        manifest["status"] = "numeric-failure"
        manifest["failure"] = str(exc)
        print(f"error: {exc}", file=sys.stderr)
        code = 2
    write_json(os.path.join(args.out, "manifest.json"), manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
