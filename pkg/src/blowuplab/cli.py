"""Command-line entry point: reproducible runs, JSON records, CSV tables.

One structured config drives every subcommand. Runs are deterministic:
the same config and seeds produce byte-identical numeric payloads, and
every emitted number is traceable to the sha256 hash of the semantically
meaningful config fields.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import HalfSpacePoint, TracelessSymmetricForm
from . import exponents as exponents_mod
from . import integrals as integrals_mod
from . import bubble as bubble_mod
from . import corrector as corrector_mod
from . import energy as energy_mod
from . import blowup as blowup_mod

SCHEMA_VERSION = 1

ENV_OUTPUT_DIR = "BLOWUPLAB_OUTPUT_DIR"
ENV_THREADS = "BLOWUPLAB_THREADS"


class PayloadMissingError(KeyError):
    """An export was requested for a payload the record does not carry."""


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    """Declarative description of a run; see README for the schema.

    eps values are kept as exact rational strings so the exponent
    subcommand can use them losslessly; float consumers convert.
    output_dir and threads are execution plumbing and excluded from the
    config hash.
    """

    schema_version: int = SCHEMA_VERSION
    n: int = 7
    eps: tuple = ("1/100", "1/1000", "1/10000", "1/100000")
    grid: dict = field(default_factory=lambda: {
        "R_r": 40.0, "R_t": 40.0, "dr": 0.025, "dt": 0.025, "grading": 4.0})
    cutoff_R: float = 40.0
    boundary_field: dict = field(default_factory=lambda: {
        "builtin": "two_bump", "params": {}})
    window: tuple = (0.25, 10.0)
    p: int = 2
    seeds: tuple = (20240816,)
    output_dir: str = "runs"
    threads: int | None = None

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(
                f"unsupported config schema version {self.schema_version}; "
                f"this tool reads version {SCHEMA_VERSION}")
        if not isinstance(self.n, int) or self.n < 5:
            raise ValueError(f"n must be an integer >= 5, got {self.n!r}")
        for key in ("R_r", "R_t", "dr", "dt", "grading"):
            if key not in self.grid:
                raise ValueError(f"grid spec missing field {key!r}")
            if float(self.grid[key]) <= 0:
                raise ValueError(f"grid field {key} must be > 0, got "
                                 f"{self.grid[key]}")
        if self.cutoff_R <= 0:
            raise ValueError("cutoff radius must be > 0")
        a, b = self.window
        if not 0 < a < b:
            raise ValueError(f"window must satisfy 0 < a < b, got {self.window}")
        if self.p not in (1, 2):
            raise ValueError(f"p must be 1 or 2, got {self.p}")
        if len(self.seeds) == 0:
            raise ValueError("at least one seed is required")
        for e in self.eps:
            f = Fraction(e)          # raises on malformed rationals
            if f <= 0:
                raise ValueError(f"eps values must be > 0, got {e}")

    def eps_fractions(self) -> list:
        return [Fraction(e) for e in self.eps]

    def eps_floats(self) -> list:
        return [float(Fraction(e)) for e in self.eps]

    def grid_spec(self) -> corrector_mod.GridSpec:
        g = self.grid
        return corrector_mod.GridSpec(
            R_r=float(g["R_r"]), R_t=float(g["R_t"]),
            dr=float(g["dr"]), dt=float(g["dt"]),
            grading=float(g["grading"]))

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "n": self.n,
            "eps": list(self.eps),
            "grid": dict(self.grid),
            "cutoff_R": self.cutoff_R,
            "boundary_field": dict(self.boundary_field),
            "window": list(self.window),
            "p": self.p,
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "threads": self.threads,
        }

    def semantic_dict(self) -> dict:
        d = self.to_dict()
        del d["output_dir"]          # where results land does not change them
        del d["threads"]             # nor does how many workers computed them
        return d

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        known = set(cls.__dataclass_fields__)
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        for tup_key in ("eps", "seeds", "window"):
            if tup_key in raw:
                raw[tup_key] = tuple(raw[tup_key])
        return cls(**raw)


def resolve_config(args) -> RunConfig:
    """Config file -> flag overrides -> environment overrides."""
    cfg = RunConfig.from_file(args.config) if getattr(args, "config", None) \
        else RunConfig()
    overrides = {}
    if getattr(args, "n", None) is not None:
        overrides["n"] = args.n
    if getattr(args, "output_dir", None) is not None:
        overrides["output_dir"] = args.output_dir
    env_out = os.environ.get(ENV_OUTPUT_DIR)
    if env_out:
        overrides["output_dir"] = env_out
    env_threads = os.environ.get(ENV_THREADS)
    if env_threads:
        overrides["threads"] = int(env_threads)
    return replace(cfg, **overrides) if overrides else cfg


# ---------------------------------------------------------------------------
# records and serialization


@dataclass
class ResultRecord:
    """Everything a subcommand produced, traceable to the config hash."""

    run_id: str
    config_hash: str
    version: str
    command: str
    statuses: dict              # check name -> "pass" | "fail" | "flag"
    payload: dict               # JSON-safe numeric payloads
    files: list                 # artifacts written, relative to output_dir
    arrays: dict = field(default_factory=dict)   # in-memory only

    @property
    def worst(self) -> int:
        if any(v == "fail" for v in self.statuses.values()):
            return 1
        return 0

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config_hash": self.config_hash,
            "version": self.version,
            "command": self.command,
            "statuses": dict(sorted(self.statuses.items())),
            "payload": self.payload,
            "files": list(self.files),
        }


def _json_safe(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_json_safe(obj), f, indent=2, sort_keys=True)
        f.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])


def _record(cfg: RunConfig, command: str, statuses, payload, files,
            arrays=None) -> ResultRecord:
    return ResultRecord(
        run_id=f"{cfg.config_hash[:12]}:{command}",
        config_hash=cfg.config_hash, version=__version__, command=command,
        statuses=statuses, payload=_json_safe(payload), files=files,
        arrays=arrays or {})


def _finish(cfg: RunConfig, rec: ResultRecord, quiet: bool = False) -> int:
    out = Path(cfg.output_dir)
    name = rec.command.replace(" ", "_") + "_record.json"
    _write_json(out / name, rec.to_dict())
    rec.files.append(name)
    if not quiet:
        for check, status in sorted(rec.statuses.items()):
            print(f"{status.upper():5s} {check}")
        print(f"record: {out / name} (config {rec.config_hash[:12]})")
    return rec.worst


# ---------------------------------------------------------------------------
# shared computations


def _solved_profile(cfg: RunConfig, _cache={}):
    key = (cfg.n, json.dumps(cfg.grid, sort_keys=True))
    if key not in _cache:
        _cache[key] = corrector_mod.solve_corrector(cfg.n, cfg.grid_spec())
    return _cache[key]


def _coefficients(cfg: RunConfig) -> energy_mod.EnergyCoefficients:
    prof = _solved_profile(cfg)
    pairing = corrector_mod.pairing_per_unit_norm(prof)
    return energy_mod.coefficients(cfg.n, pairing_per_unit_norm=pairing)


def _boundary_field(cfg: RunConfig) -> blowup_mod.ModelBoundaryField:
    spec = cfg.boundary_field
    if "table" in spec:
        table = np.loadtxt(spec["table"], delimiter=",")
        side = round(len(table.ravel()) ** (1.0 / (cfg.n - 1)))
        return blowup_mod.ModelBoundaryField.from_table(
            cfg.n, table.reshape((side,) * (cfg.n - 1)))
    name = spec.get("builtin", "two_bump")
    params = spec.get("params", {})
    builders = {
        "constant": blowup_mod.ModelBoundaryField.constant,
        "one_bump": blowup_mod.ModelBoundaryField.one_bump,
        "two_bump": blowup_mod.ModelBoundaryField.two_bump,
    }
    if name not in builders:
        raise ValueError(f"unknown builtin boundary field {name!r}")
    return builders[name](cfg.n, **params)


# ---------------------------------------------------------------------------
# subcommands


def cmd_exponents(cfg: RunConfig, args) -> ResultRecord:
    eps_list = [Fraction(args.eps)] if args.eps else cfg.eps_fractions()
    rows, statuses = [], {}
    for e in eps_list:
        exp = exponents_mod.exponents_for(cfg.n, e)
        rep = exponents_mod.check_admissible(exp)
        r1, r2 = exp.identity_residuals()
        ok = r1 == 0 and r2 == 0 and rep.admissible
        statuses[f"exponents eps={e}"] = "pass" if ok else "fail"
        rows.append({
            "eps": str(e), "s_eps": str(exp.s_eps), "q": str(exp.q_nittka),
            "r": str(exp.r_nittka), "identity_residuals": [str(r1), str(r2)],
            "admissible": rep.admissible,
            "lower_margin": str(rep.lower_margin),
            "upper_margin": str(rep.upper_margin),
            "critical_case": rep.critical_case,
        })
        print(f"n={cfg.n} eps={e}")
        print(exponents_mod.check_admissible(exp))
    return _record(cfg, "exponents", statuses, {"exponents": rows}, [])


def cmd_integrals(cfg: RunConfig, args) -> ResultRecord:
    rows = integrals_mod.integral_table()
    out = Path(cfg.output_dir)
    header = ["m", "alpha", "closed_form", "quadrature", "rel_err",
              "recursion1_err", "recursion2_err", "recursion3_err"]
    # a recursion outside its validity condition is reported as an empty cell
    _write_csv(out / "integrals_table.csv", header,
               [["" if r[k] is None else r[k] for k in header] for r in rows])
    worst_quad = max(r["rel_err"] for r in rows)
    worst_rec = max(r[k] for r in rows
                    for k in ("recursion1_err", "recursion2_err",
                              "recursion3_err") if r[k] is not None)
    statuses = {
        "integrals closed form vs quadrature": "pass" if worst_quad <= 1e-8
        else "fail",
        "integrals recursion identities": "pass" if worst_rec <= 1e-10
        else "fail",
    }
    payload = {"rows": len(rows), "max_quadrature_rel_err": worst_quad,
               "max_recursion_rel_err": worst_rec}
    return _record(cfg, "integrals", statuses, payload,
                   ["integrals_table.csv"])


def cmd_bubble(cfg: RunConfig, args) -> ResultRecord:
    n, delta, K = cfg.n, args.delta, args.samples
    if K < 2:
        raise ValueError("need at least 2 samples")
    if delta <= 0:
        raise ValueError("delta must be positive")
    xs = np.linspace(0.0, 10.0, K)          # stretched ray ladder
    rows = []
    for x in xs:
        if args.ray == "normal":
            p = HalfSpacePoint(np.zeros(n - 1), float(x))
        else:
            z = np.zeros(n - 1)
            z[0] = float(x)
            p = HalfSpacePoint(z, 0.0)
        uval = bubble_mod.U_scaled(n, delta, HalfSpacePoint(p.z * delta,
                                                            p.t * delta))
        rows.append([float(x) * delta, uval]
                    + [bubble_mod.kernel_j(n, b, p) for b in range(1, n + 1)])
    out = Path(cfg.output_dir)
    header = ["coordinate", "U"] + [f"j_{b}" for b in range(1, n + 1)]
    fname = f"bubble_profile_{args.ray}.csv"
    _write_csv(out / fname, header, rows)
    payload = {"delta": delta, "ray": args.ray, "samples": K,
               "sup_U": delta ** (-(n - 2) / 2.0)}
    return _record(cfg, "bubble", {"bubble profile": "pass"}, payload, [fname])


def cmd_corrector(cfg: RunConfig, args) -> ResultRecord:
    overrides = {}
    for key, flag in (("R_r", "Rr"), ("R_t", "Rt"), ("dr", "dr"),
                      ("dt", "dt")):
        val = getattr(args, flag, None)
        if val is not None:
            overrides[key] = val
    if overrides:
        cfg = replace(cfg, grid={**cfg.grid, **overrides})
    prof = _solved_profile(cfg)
    h = blowup_mod.ModelBoundaryField._default_base(cfg.n)
    fld = corrector_mod.CorrectorField(h, prof)
    orth = corrector_mod.check_orthogonality(fld)
    pair = corrector_mod.pairing_report(fld)

    out = Path(cfg.output_dir)
    R, T = np.meshgrid(prof.r, prof.t, indexing="ij")
    rows = np.stack([R.ravel(), T.ravel(), prof.w.ravel()], axis=1)
    _write_csv(out / "corrector_grid.csv", ["r", "t", "w"],
               [list(map(float, row)) for row in rows])

    statuses = {
        "corrector discrete residual": "pass" if prof.residual <= 1e-10
        else "fail",
        "corrector orthogonality": "pass" if orth.certified else "fail",
        "corrector pairing nonpositive": "pass" if pair.nonpositive
        else "fail",
    }
    payload = {
        "grid": cfg.grid, "discrete_residual": prof.residual,
        "pairing": {
            "value": pair.value, "ibp_value": pair.ibp_value,
            "ibp_simplified": pair.ibp_simplified, "rel_gap": pair.rel_gap,
            "per_unit_norm_sq": pair.per_unit_norm_sq,
            "boundary_slice_value": pair.boundary_slice_value,
        },
        "orthogonality": {
            "angular_quadratic": orth.angular_quadratic,
            "angular_cubic_max": orth.angular_cubic_max,
            "radial_boundary": orth.radial_boundary,
            "radial_scaling_kernel": orth.radial_scaling_kernel,
            "certified": orth.certified,
        },
        "w_origin": float(prof.w[0, 0]),
    }
    _write_json(out / "corrector_report.json", payload)
    arrays = {"corrector-grid": (prof.r, prof.t, prof.w)}
    return _record(cfg, "corrector", statuses, payload,
                   ["corrector_grid.csv", "corrector_report.json"], arrays)


def cmd_energy(cfg: RunConfig, args) -> ResultRecord:
    out = Path(cfg.output_dir)
    action = args.action
    statuses, payload, files, arrays = {}, {}, [], {}

    if action == "coefficients":
        coeff = _coefficients(cfg)
        alt = energy_mod.coefficients_alternate(cfg.n)
        gap = max(
            abs(coeff.flat_energy - alt["flat_energy"]) / coeff.flat_energy,
            abs(coeff.scaling_coeff - alt["scaling_coeff"])
            / coeff.scaling_coeff)
        statuses["energy coefficient cross-check"] = \
            "pass" if gap <= 1e-10 else "fail"
        payload = {"coefficients": coeff.summary(), "cross_check_gap": gap}
        _write_json(out / "energy_coefficients.json", payload)
        files.append("energy_coefficients.json")

    elif action == "phi":
        if not args.h:
            raise ValueError("energy phi requires --h FILE (CSV matrix)")
        mat = np.loadtxt(args.h, delimiter=",")
        h = TracelessSymmetricForm(np.atleast_2d(mat))
        coeff = _coefficients(cfg)
        val = energy_mod.phi(h, coeff)
        statuses["energy phi nonpositive"] = "pass" if val <= 0 else "fail"
        payload = {"h_norm_sq": h.norm_sq, "phi": val,
                   "phi_per_unit_norm": coeff.phi_per_unit_norm,
                   "p_exponent": cfg.p}
        _write_json(out / "energy_phi.json", payload)
        files.append("energy_phi.json")

    elif action == "check-expansion":
        lam = args.lam if args.lam is not None else 1.0
        rep = energy_mod.boundary_term_expansion_check(cfg.n, lam=lam)
        ok = rep.c1_rel_err <= 0.05 and rep.c2_rel_err <= 0.05
        statuses["energy expansion coefficients"] = "pass" if ok else "fail"
        payload = {
            "lam": lam, "eps": list(rep.eps), "values": list(rep.values),
            "c1_fit": rep.c1_fit, "c1_target": rep.c1_target,
            "c1_rel_err": rep.c1_rel_err,
            "c2_fit": rep.c2_fit, "c2_target": rep.c2_target,
            "c2_rel_err": rep.c2_rel_err,
        }
        _write_json(out / "expansion_check.json", payload)
        _write_csv(out / "expansion_sweep.csv", ["eps", "value"],
                   list(zip(rep.eps, rep.values)))
        files += ["expansion_check.json", "expansion_sweep.csv"]

    elif action == "residual-orders":
        prof = _solved_profile(cfg)
        fld = _boundary_field(cfg)
        h = fld.shape_at(np.zeros(cfg.n - 1))
        jet = energy_mod.FermiMetricJet.shape_only(h)
        rep = energy_mod.ansatz_residual_orders(jet, prof)
        ok = abs(rep.slope_with - 2.0) <= 0.2 \
            and abs(rep.slope_without - 1.0) <= 0.2
        statuses["energy residual orders"] = "pass" if ok else "fail"
        payload = {
            "window": rep.window, "p": rep.p,
            "slope_with": rep.slope_with, "slope_without": rep.slope_without,
            "r2_with": rep.r2_with, "r2_without": rep.r2_without,
            "rows": rep.rows(),
        }
        _write_json(out / "residual_orders.json", payload)
        _write_csv(out / "residual_orders.csv",
                   ["delta", "norm_without", "norm_with"],
                   [[r["delta"], r["norm_without"], r["norm_with"]]
                    for r in rep.rows()])
        files += ["residual_orders.json", "residual_orders.csv"]
        arrays["residual-orders"] = rep

    elif action == "mc":
        jet = energy_mod.FermiMetricJet.flat(cfg.n)
        rep = energy_mod.energy_direct_mc(
            cfg.n, args.delta, jet, seed=cfg.seeds[0],
            cutoff_radius=cfg.cutoff_R)
        band = max(3.0 * rep.stderr, 1e-10)
        ok = abs(rep.value - rep.flat_target) <= band
        statuses["energy mc flat"] = "pass" if ok else "fail"
        payload = {
            "delta": rep.delta, "num_samples": rep.num_samples,
            "value": rep.value, "stderr": rep.stderr,
            "flat_target": rep.flat_target, "band": band,
            "interior_value": rep.interior_value,
            "boundary_value": rep.boundary_value,
        }
        _write_json(out / "energy_mc.json", payload)
        files.append("energy_mc.json")

    else:
        raise ValueError(f"unknown energy action {action!r}")

    return _record(cfg, f"energy {action}", statuses, payload, files, arrays)


def cmd_blowup(cfg: RunConfig, args) -> ResultRecord:
    out = Path(cfg.output_dir)
    coeff = _coefficients(cfg)
    fld = _boundary_field(cfg)
    functional = blowup_mod.ReducedFunctional(
        coeff, p=cfg.p, window=tuple(cfg.window))
    with warnings.catch_warnings(record=True) as wrec:
        warnings.simplefilter("always")
        res = blowup_mod.search(fld, functional, threads=cfg.threads)
    flags = [str(w.message) for w in wrec]

    statuses = {"blowup search": "flag" if res.degenerate else "pass"}
    payload = {
        "q_star": list(res.q_star), "grid_q": list(res.grid_q),
        "grid_index": res.grid_index, "lambda_star": res.lambda_star,
        "value": res.value, "phi_star": res.phi_star,
        "norm_sq_star": res.norm_sq_star, "degenerate": res.degenerate,
        "window_used": list(res.window_used), "p": res.p, "flags": flags,
    }
    _write_json(out / "blowup_search.json", payload)
    files = ["blowup_search.json"]
    arrays = {}

    if args.action == "family":
        eps = [float(Fraction(e)) for e in args.eps.split(",")] if args.eps \
            else cfg.eps_floats()
        fam = blowup_mod.family(res.q_star, res.lambda_star, eps, fld,
                                _solved_profile(cfg), scaling=args.scaling,
                                cutoff_radius=cfg.cutoff_R)
        cert = blowup_mod.certify_blowup(fam)
        statuses["blowup certificate"] = "pass" if cert.passed else "fail"
        payload["certificate"] = cert.to_dict()
        _write_json(out / "blowup_certificate.json", cert.to_dict())

        prof_rows = []
        for p_ in fam.profiles:
            for coord, uval in zip(p_["ray_coord"], p_["ray_u"]):
                prof_rows.append([p_["eps"], p_["delta"], float(coord),
                                  float(uval)])
        _write_csv(out / "blowup_profiles.csv",
                   ["eps", "delta", "coordinate", "u_value"], prof_rows)
        rate_rows = [[e, s, r] for e, s, r in
                     zip(fam.eps_list, fam.sup_values, cert.fit_residuals)]
        _write_csv(out / "blowup_rate.csv",
                   ["eps", "sup_u", "log_fit_residual"], rate_rows)
        files += ["blowup_certificate.json", "blowup_profiles.csv",
                  "blowup_rate.csv"]
        arrays["rate"] = (fam, cert)

    return _record(cfg, f"blowup {args.action}", statuses, payload, files,
                   arrays)


# ---------------------------------------------------------------------------
# verify: the composed invariant suite


def run(cfg: RunConfig, full: bool = False, quiet: bool = True) -> ResultRecord:
    """Execute the module suite in dependency order and merge the records."""

    class _Args:
        pass

    statuses, payload, files, arrays = {}, {}, [], {}

    def merge(rec: ResultRecord, key: str):
        statuses.update(rec.statuses)
        payload[key] = rec.payload
        files.extend(rec.files)
        arrays.update(rec.arrays)

    a = _Args()
    a.eps = None
    with _suppress_stdout() if quiet else _noop():
        merge(cmd_exponents(cfg, a), "exponents")
    merge(cmd_integrals(cfg, a), "integrals")
    merge(cmd_corrector(cfg, _Args()), "corrector")

    a = _Args()
    a.action = "coefficients"
    merge(cmd_energy(cfg, a), "energy_coefficients")
    a = _Args()
    a.action = "check-expansion"
    a.lam = None
    merge(cmd_energy(cfg, a), "expansion")

    # phi quadratic scaling on seeded random forms
    coeff = _coefficients(cfg)
    rng = np.random.default_rng(cfg.seeds[0])
    from .geometry import random_traceless
    scale_ok = True
    for _ in range(20):
        h = random_traceless(cfg.n, rng)
        v1, v4 = energy_mod.phi(h, coeff), energy_mod.phi(h.scaled(2.0), coeff)
        if v1 > 0 or abs(v4 - 4.0 * v1) > 1e-12 * max(1.0, abs(v1)):
            scale_ok = False
    statuses["energy phi sign and scaling"] = "pass" if scale_ok else "fail"

    if full:
        a = _Args()
        a.action = "residual-orders"
        merge(cmd_energy(cfg, a), "residual_orders")
        a = _Args()
        a.action = "mc"
        a.delta = 0.05
        merge(cmd_energy(cfg, a), "energy_mc")

        prof = _solved_profile(cfg)
        h = blowup_mod.ModelBoundaryField._default_base(cfg.n)
        oracle = corrector_mod.ndim_residual_check(prof, h,
                                                   seed=cfg.seeds[0])
        statuses["corrector n-dim residual oracle"] = \
            "pass" if oracle.passed else "fail"
        payload["ndim_residual"] = {
            "max_rel_residual": oracle.max_rel_residual,
            "num_points": oracle.num_points,
        }

        fine = replace(cfg, grid={**cfg.grid, "dr": 0.006, "dt": 0.006})
        pair = corrector_mod.pairing_report(corrector_mod.CorrectorField(
            h, _solved_profile(fine)))
        statuses["corrector pairing forms agree (fine grid)"] = \
            "pass" if pair.rel_gap <= 1e-4 else "fail"
        payload["fine_pairing"] = {"rel_gap": pair.rel_gap,
                                   "value": pair.value,
                                   "ibp_value": pair.ibp_value}

        a = _Args()
        a.action = "family"
        a.eps = None
        a.scaling = "sqrt"
        merge(cmd_blowup(cfg, a), "blowup")
    else:
        a = _Args()
        a.action = "search"
        merge(cmd_blowup(cfg, a), "blowup_search")

    return _record(cfg, "verify" if not full else "verify full",
                   statuses, payload, files, arrays)


def cmd_verify(cfg: RunConfig, args) -> ResultRecord:
    rec = run(cfg, full=args.full)
    if args.export:
        out = Path(cfg.output_dir)
        for what in args.export.split(","):
            rec.files.append(str(export_plot_data(rec, what.strip(), out)))
    return rec


# ---------------------------------------------------------------------------
# plot-data export


def export_plot_data(record: ResultRecord, what: str, outdir) -> Path:
    """Re-emit a payload from a record as a documented CSV (no plotting)."""
    outdir = Path(outdir)
    if what == "rate":
        if "rate" not in record.arrays:
            raise PayloadMissingError(
                f"record {record.run_id} has no payload 'rate'")
        fam, cert = record.arrays["rate"]
        path = outdir / "export_rate.csv"
        _write_csv(path, ["eps", "sup_u", "log_fit_residual"],
                   [[e, s, r] for e, s, r in
                    zip(fam.eps_list, fam.sup_values, cert.fit_residuals)])
        return path
    if what == "corrector-grid":
        if "corrector-grid" not in record.arrays:
            raise PayloadMissingError(
                f"record {record.run_id} has no payload 'corrector-grid'")
        r, t, w = record.arrays["corrector-grid"]
        R, T = np.meshgrid(r, t, indexing="ij")
        path = outdir / "export_corrector_grid.csv"
        _write_csv(path, ["r", "t", "w"],
                   np.stack([R.ravel(), T.ravel(), w.ravel()], axis=1).tolist())
        return path
    if what == "residual-orders":
        if "residual-orders" not in record.arrays:
            raise PayloadMissingError(
                f"record {record.run_id} has no payload 'residual-orders'")
        rep = record.arrays["residual-orders"]
        path = outdir / "export_residual_orders.csv"
        _write_csv(path, ["delta", "norm_without", "norm_with"],
                   [[r["delta"], r["norm_without"], r["norm_with"]]
                    for r in rep.rows()])
        return path
    raise PayloadMissingError(f"unknown export {what!r}; choose rate, "
                              "corrector-grid, or residual-orders")


# ---------------------------------------------------------------------------
# entry point


class _suppress_stdout:
    def __enter__(self):
        self._old = sys.stdout
        sys.stdout = open(os.devnull, "w")

    def __exit__(self, *exc):
        sys.stdout.close()
        sys.stdout = self._old
        return False


class _noop:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="blowuplab",
        description="Numerical laboratory for boundary-bubble blow-up "
                    "constructions")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (see README)")
        p.add_argument("--n", type=int, help="override dimension")
        p.add_argument("--output-dir", help="override output directory")
        p.add_argument("--figures", action="store_true",
                       help="render PNG figures next to the tables")

    p = sub.add_parser("exponents", help="exact supercritical exponent algebra")
    common(p)
    p.add_argument("--eps", help="single rational eps, e.g. 1/100")

    p = sub.add_parser("integrals", help="half-space integral table and checks")
    common(p)

    p = sub.add_parser("bubble", help="bubble and kernel profiles along a ray")
    common(p)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--ray", choices=("normal", "tangent"), default="normal")
    p.add_argument("--samples", type=int, default=50)

    p = sub.add_parser("corrector", help="solve the corrector profile")
    common(p)
    p.add_argument("--Rr", type=float, help="override radial truncation")
    p.add_argument("--Rt", type=float, help="override normal truncation")
    p.add_argument("--dr", type=float, help="override radial spacing")
    p.add_argument("--dt", type=float, help="override normal spacing")

    p = sub.add_parser("energy", help="reduced-energy coefficients and checks")
    common(p)
    p.add_argument("action", choices=("coefficients", "phi", "check-expansion",
                                      "residual-orders", "mc"))
    p.add_argument("--h", help="CSV matrix file for phi")
    p.add_argument("--lam", type=float, help="scale for check-expansion")
    p.add_argument("--delta", type=float, default=0.05, help="scale for mc")

    p = sub.add_parser("blowup", help="reduced-functional search and family")
    common(p)
    p.add_argument("action", choices=("search", "family"))
    p.add_argument("--eps", help="comma-separated eps list for family")
    p.add_argument("--scaling", choices=("sqrt", "linear"), default="sqrt")

    p = sub.add_parser("verify", help="run the invariant suite")
    common(p)
    p.add_argument("--full", action="store_true",
                   help="include the slow checks (fine grids, MC, family)")
    p.add_argument("--export",
                   help="comma-separated plot-data exports "
                        "(rate,corrector-grid,residual-orders)")

    return ap


_HANDLERS = {
    "exponents": cmd_exponents,
    "integrals": cmd_integrals,
    "bubble": cmd_bubble,
    "corrector": cmd_corrector,
    "energy": cmd_energy,
    "blowup": cmd_blowup,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"[config] error: {exc}", file=sys.stderr)
        return 2
    try:
        rec = _HANDLERS[args.command](cfg, args)
    except Exception as exc:
        print(f"[{args.command}] error (config {cfg.config_hash[:12]}): "
              f"{exc}", file=sys.stderr)
        return 2
    code = _finish(cfg, rec)
    if getattr(args, "figures", False):
        from . import figures
        made = figures.render(Path(cfg.output_dir), rec.files)
        for f in made:
            print(f"figure: {f}")
    return code


if __name__ == "__main__":
    sys.exit(main())
