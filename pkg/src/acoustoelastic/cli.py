"""Command-line entry point: ``acoustoelastic <command> [--config PATH] [--out DIR] ...``.

Each command reads an optional ``key = value`` config file, runs its checks,
writes CSV/JSON outputs plus ``manifest.json`` into the output directory and
exits 0 iff every gated check passed (1 otherwise, 2 on config errors).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import math
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .geometry import Materials

MATERIAL_KEYS = ("lam", "mu", "rho_e", "rho_b", "kappa")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple:
    vals = tuple(float(t) for t in text.replace(",", " ").split())
    if not vals:
        raise ValueError("empty list")
    return vals


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class Key:
    parse: Callable[[str], Any]
    default: Any
    check: Callable[[Any], bool] | None = None
    message: str = ""


def _positive(x):
    return x > 0


MATERIAL_SCHEMA = {f"material.{k}": Key(float, None, _positive, "must be positive") for k in MATERIAL_KEYS}
MATERIAL_SCHEMA["material.lam"] = Key(float, None)

SCHEMAS: dict[str, dict[str, Key]] = {
    "asymptotics": {
        **MATERIAL_SCHEMA,
        "sector.theta_m": Key(float, 0.0),
        "sector.theta_M": Key(float, math.pi / 2),
        "sector.h": Key(float, 1.0, _positive, "must be positive"),
        "phi": Key(float, None),
        "s_grid": Key(_floats, (10.0, 14.0, 20.0, 28.0, 40.0, 57.0, 80.0)),
        "alpha": Key(float, 0.0, lambda a: a >= 0, "must be non-negative"),
        "laplace.alpha": Key(float, 0.5, lambda a: a >= 0, "must be non-negative"),
        "laplace.h": Key(float, 1.0, lambda h: 0 < h < math.e, "need 0 < h < e"),
        "laplace.a_grid": Key(_floats, (20.0, 40.0, 80.0)),
        "rate_tol": Key(float, 0.2, _positive, "must be positive"),
    },
    "identity": {
        **MATERIAL_SCHEMA,
        "omega": Key(float, 3.0, _positive, "must be positive"),
        "rotation": Key(float, 0.0),
        "s_grid": Key(_floats, (10.0, 20.0, 40.0)),
        "field": Key(str, "exact", lambda f: f in ("exact", "zero"), "must be exact or zero"),
        "tol": Key(float, 1e-8, _positive, "must be positive"),
        "grid.values": Key(_floats, (-2.0, -1.0, 0.0, 1.0, 2.0)),
        "grid.theta_m": Key(float, 0.0),
        "grid.theta_M": Key(float, 1.2),
        "random_draws": Key(int, 100, lambda n: n >= 0, "must be non-negative"),
    },
    "forward": {
        "run.n_dir": Key(int, 128, lambda n: n >= 8, "must be at least 8"),
        "run.h": Key(float, None, _positive, "must be positive"),
        "run.radius": Key(float, None, _positive, "must be positive"),
        "run.oracle": Key(str, "none", lambda s: s in ("none", "disk"), "must be none or disk"),
        "run.oracle_tol": Key(float, 0.02, _positive, "must be positive"),
        "run.residual_tol": Key(float, 1e-8, _positive, "must be positive"),
    },
    "eigs": {
        **MATERIAL_SCHEMA,
        "geometry.type": Key(str, "disk", lambda s: s in ("disk", "square", "regular_polygon"),
                             "must be disk, square or regular_polygon"),
        "geometry.radius": Key(float, 1.0, _positive, "must be positive"),
        "geometry.side": Key(float, 1.0, _positive, "must be positive"),
        "geometry.sides": Key(int, 3, lambda n: n >= 3, "need at least 3 sides"),
        "interval": Key(_floats, (2.0, 5.6), lambda t: len(t) == 2 and 0 < t[0] < t[1], "need 0 < lo < hi"),
        "coarse_h": Key(float, 1 / 16, _positive, "must be positive"),
        "n_grid": Key(int, 180, lambda n: n >= 16, "must be at least 16"),
        "fine_h": Key(float, None, _positive, "must be positive"),
        "n_candidates": Key(int, 3, _positive, "must be positive"),
        "oracle_tol": Key(float, 1e-5, _positive, "must be positive"),
        "probe_factor": Key(float, 8.0, _positive, "must be positive"),
    },
    "visibility": {
        **MATERIAL_SCHEMA,
        "scenes": Key(lambda t: tuple(x.strip() for x in t.split(",") if x.strip()), ("triangle", "square")),
        "kind": Key(str, "compressional", lambda s: s in ("compressional", "shear"), "compressional or shear"),
        "ks_diam": Key(_floats, (0.5, 1.0, 2.0)),
        "n_angles": Key(int, 8, _positive, "must be positive"),
        "threshold": Key(float, 1e-6, _positive, "must be positive"),
        "n_dir": Key(int, 128, lambda n: n >= 8, "must be at least 8"),
        "gated": Key(_bool, None),
    },
    "identify": {
        **MATERIAL_SCHEMA,
        "ks_diam": Key(float, 1.0, _positive, "must be positive"),
        "angles": Key(_floats, (0.0, 2 * math.pi / 3, 4 * math.pi / 3)),
        "threshold": Key(float, 1e-5, _positive, "must be positive"),
        "identical_tol": Key(float, 1e-10, _positive, "must be positive"),
        "n_dir": Key(int, 128, lambda n: n >= 8, "must be at least 8"),
    },
    "edge3d": {
        **MATERIAL_SCHEMA,
        "omega": Key(float, 2.0, _positive, "must be positive"),
        "bump.center": Key(float, 0.1),
        "bump.half_width": Key(float, 0.4, _positive, "must be positive"),
        "half_height": Key(float, 1.0, _positive, "must be positive"),
        "n_quad": Key(int, 160, lambda n: n >= 32, "must be at least 32"),
        "residual_tol": Key(float, 1e-5, _positive, "must be positive"),
        "identity_tol": Key(float, 1e-8, _positive, "must be positive"),
        "n_points": Key(int, 6, _positive, "must be positive"),
    },
}

# forward scenes reuse the scene-file grammar for every key outside run.*
SCENE_PREFIXES = ("material.", "incident.", "inclusion.")


@dataclass
class ExperimentConfig:
    command: str
    params: dict
    text: str = ""
    scene_text: str = ""

    def __getitem__(self, key):
        return self.params[key]

    def materials(self, **defaults) -> Materials:
        kw = dict(defaults)
        for k in MATERIAL_KEYS:
            if self.params.get(f"material.{k}") is not None:
                kw[k] = self.params[f"material.{k}"]
        try:
            return Materials(**kw)
        except ValueError as exc:
            raise ConfigError(f"material: {exc}") from None


def parse_config(command: str, text: str = "") -> ExperimentConfig:
    """Parse ``key = value`` lines against the command's schema; errors carry line numbers."""
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    schema = SCHEMAS[command]
    params = {k: spec.default for k, spec in schema.items()}
    scene_lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            scene_lines.append("")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if command == "forward" and key.startswith(SCENE_PREFIXES):
            scene_lines.append(raw)
            continue
        scene_lines.append("")
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        spec = schema[key]
        try:
            value = spec.parse(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        if spec.check is not None and not spec.check(value):
            raise ConfigError(f"line {lineno}: {key} {spec.message}")
        params[key] = value
    return ExperimentConfig(command, params, text, "\n".join(scene_lines))


def content_hash(text: str) -> str:
    """Git blob hash of the config text."""
    data = text.encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    config_hash: str
    seed: int
    threads: int
    checks: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        out = asdict(self)
        out["config"] = {k: _jsonable(v) for k, v in self.config.items()}
        out["checks"] = {k: bool(v) for k, v in self.checks.items()}
        out["passed"] = self.passed
        return out


def _jsonable(v):
    if isinstance(v, tuple):
        return list(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


class Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, cfg: ExperimentConfig, out: Path, seed: int, threads: int):
        self.cfg, self.out = cfg, out
        self.rng = np.random.default_rng(seed)
        self.manifest = RunManifest(cfg.command, cfg.params, content_hash(cfg.text), seed, threads)
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.manifest.outputs.append(name)
        return self.out / name

    def check(self, name: str, ok) -> None:
        self.manifest.checks[name] = bool(ok)

    def write_json(self, name: str, obj) -> None:
        with open(self.path(name), "w") as fh:
            json.dump(obj, fh, indent=2, default=_jsonable)

    def write_rows(self, name: str, header, rows) -> None:
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


# ---------------------------------------------------------------------------
# commands


def cmd_asymptotics(run: Run) -> None:
    from . import asymptotics as A
    from .geometry import SectorGeometry, admissible_direction

    p = run.cfg.params
    mat = run.cfg.materials()
    try:
        sector = SectorGeometry(p["sector.theta_m"], p["sector.theta_M"], p["sector.h"])
    except ValueError as exc:
        raise ConfigError(f"sector: {exc}") from None
    phi = p["phi"] if p["phi"] is not None else admissible_direction(sector)[0]
    s_grid, tol = p["s_grid"], p["rate_tol"]
    summary = {}

    lap = A.laplace_tail_check(p["laplace.alpha"], p["laplace.h"], p["laplace.a_grid"])
    lap.to_csv(run.path("laplace_tail.csv"))
    run.check("laplace_tail_rate", abs(lap.extras["tail_rate"] - lap.sharp_rate) <= tol * lap.sharp_rate)
    summary["laplace_tail"] = lap.to_json() | {"tail_rate": lap.extras["tail_rate"]}

    reports = [A.v0_sector_moment_check(sector, phi, p["alpha"], s_grid),
               A.v0_sector_moment_check(sector, phi, p["alpha"], s_grid, vector=True),
               A.boundary_moment_check(sector, phi, p["alpha"], s_grid)]
    for rep in reports:
        rep.to_csv(run.path(f"{rep.name}.csv"))
        run.check(f"{rep.name}_rate", rep.rate_at_least(tol))
        run.check(f"{rep.name}_tail_rate", abs(rep.extras["tail_rate"] - rep.sharp_rate) <= tol * rep.sharp_rate)
        run.check(f"{rep.name}_moment_bound", rep.moment_bound_holds())
        summary[rep.name] = rep.to_json() | {"tail_rate": rep.extras["tail_rate"]}

    def bound_rows(reports):
        for name, rep in reports.items():
            for s, q, b in zip(rep.s_grid, rep.quad_values, rep.closed_forms):
                yield [name, float(s), float(abs(q)), float(np.real(b))]

    norms = A.arc_norm_check(sector, phi, s_grid, mat)
    run.write_rows("arc_norms.csv", ["name", "s", "value", "bound"], bound_rows(norms))
    for name, rep in norms.items():
        run.check(f"{name}_bound", rep.bound_holds())
        summary[name] = rep.to_json()

    def v(x):
        return np.cos(x[:, 0]) + x[:, 1]

    def gv(x):
        return np.column_stack([-np.sin(x[:, 0]), np.ones(len(x))])

    def u(x):
        return np.column_stack([np.sin(x[:, 1]), x[:, 0] ** 2])

    def gu(x):
        G = np.zeros((len(x), 2, 2))
        G[:, 0, 1] = np.cos(x[:, 1])
        G[:, 1, 0] = 2 * x[:, 0]
        return G

    terms = A.arc_integral_check(sector, phi, mat, v, gv, u, gu, s_grid)
    run.write_rows("arc_terms.csv", ["name", "s", "value", "bound"], bound_rows(terms))
    for name, rep in terms.items():
        run.check(f"{name}_bound", rep.bound_holds())
        summary[name] = rep.to_json()
    run.write_json("summary.json", summary)


def cmd_identity(run: Run) -> None:
    from . import corner as C
    from .geometry import CgoPair, SectorGeometry

    p = run.cfg.params
    mat = run.cfg.materials(kappa=4.0)
    omega = p["omega"]
    sector, factory = C.exact_pair(mat, p["rotation"]) if p["field"] == "exact" else (
        SectorGeometry(p["rotation"], p["rotation"] + math.pi / 2), None)
    if factory is not None:
        v, gv, u, gu = factory(omega)
    else:
        def v(x):
            return np.zeros(len(x))

        def u(x):
            return np.zeros((len(x), 2))

        def gv(x):
            return np.zeros((len(x), 2))

        def gu(x):
            return np.zeros((len(x), 2, 2))

    rows = []
    for s in p["s_grid"]:
        b = C.assemble_identity(v, u, sector, CgoPair.for_sector(sector, s), mat, omega, gv, gu)
        rows.append([float(s), b.total.real, b.total.imag, abs(b.total), b.i3_defect()])
    run.write_rows("identity.csv", ["s", "re_total", "im_total", "abs_total", "i3_defect"], rows)
    run.check("identity_residual", max(r[3] for r in rows) < p["tol"])
    run.check("i3_relation", max(r[4] for r in rows) < 1e-10)

    try:
        qsec = SectorGeometry(p["grid.theta_m"], p["grid.theta_M"])
    except ValueError as exc:
        raise ConfigError(f"grid sector: {exc}") from None
    qrows, agree = [], 0
    for a in itertools.product(p["grid.values"], repeat=4):
        A_ = np.array(a).reshape(2, 2)
        lhs, sat = C.quadratic_form_test(A_, qsec)
        exp = C.is_conformal(A_)
        agree += sat == exp
        qrows.append([*a, lhs.real, lhs.imag, int(sat), int(exp)])
    run.write_rows("quadratic_form.csv", ["a11", "a12", "a21", "a22", "re_lhs", "im_lhs", "satisfies", "expected"],
                   qrows)
    run.check("quadratic_form_grid", agree == len(qrows))
    # random draws: generic matrices never satisfy it, projected ones always do
    rand_ok = True
    for _ in range(p["random_draws"]):
        A_ = run.rng.normal(size=(2, 2))
        P_ = np.array([[A_[0, 0], A_[0, 1]], [-A_[0, 1], A_[0, 0]]])
        rand_ok &= (not C.quadratic_form_test(A_, qsec)[1]) and C.quadratic_form_test(P_, qsec)[1]
    run.check("quadratic_form_random", rand_ok)
    run.write_json("summary.json", {"identity": rows, "grid_cases": len(qrows), "grid_agree": agree})


def _scene_polygons(mat: Materials):
    from .forward import Polygon, equal_area_square

    tri = Polygon(((0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2)))
    tri = Polygon(tuple(map(tuple, tri.array - tri.array.mean(axis=0))))
    sq = equal_area_square(tri.area)
    return {"triangle": tri, "square": sq}


def cmd_forward(run: Run) -> None:
    from . import forward as F

    p = run.cfg.params
    try:
        scene = F.parse_scene(run.cfg.scene_text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    kw = {k: p[f"run.{k}"] for k in ("h", "radius") if p[f"run.{k}"] is not None}
    fields = F.solve_disk(scene) if isinstance(scene.inclusion, F.Disk) else F.solve_polygon(
        scene, kw.get("h"), kw.get("radius"))
    ff = F.far_field(fields, p["run.n_dir"])
    ff.to_csv(run.path("far_field.csv"))
    summary = {"far_field_norm": ff.l2_norm(), "scale": scene.incident.scale, "residual": fields.residual}
    if isinstance(scene.inclusion, F.Disk):
        res = max(float(v) for v in fields.residual.values() if np.isscalar(v))
        run.check("disk_residual", res < p["run.residual_tol"])
    if p["run.oracle"] == "disk":
        if isinstance(scene.inclusion, F.Disk):
            raise ConfigError("run.oracle = disk needs a polygonal inclusion")
        verts = scene.inclusion.array
        c = verts.mean(axis=0)
        R = float(np.max(np.linalg.norm(verts - c, axis=1)))
        ref = F.far_field(F.solve_disk(F.ScatterScene(F.Disk(tuple(c), R), scene.mat, scene.incident)),
                          p["run.n_dir"])
        ref.to_csv(run.path("disk_far_field.csv"))
        rel = ff.distance(ref) / ref.l2_norm()
        summary["disk_relative_mismatch"] = rel
        run.check("disk_oracle", rel < p["run.oracle_tol"])
    run.check("far_field_finite", np.isfinite(ff.l2_norm()))
    run.write_json("summary.json", summary)


def cmd_eigs(run: Run) -> None:
    from . import eigen as E
    from . import meshing

    p = run.cfg.params
    mat = run.cfg.materials()
    typ = p["geometry.type"]

    def mesh_at(h):
        if typ == "disk":
            return meshing.disk_mesh(p["geometry.radius"], h)
        if typ == "square":
            a = p["geometry.side"]
            return meshing.polygon_mesh(np.array([[0, 0], [a, 0], [a, a], [0, a]], float), h)
        return meshing.polygon_mesh(meshing.regular_polygon(p["geometry.sides"], p["geometry.radius"]), h)

    record: list = []
    coarse = E.EigenSystem(mesh_at(p["coarse_h"]), mat)
    cands = E.scan(coarse, p["interval"], p["n_grid"], record=record)[: p["n_candidates"]]
    if p["fine_h"] is not None and cands:
        fine = E.EigenSystem(mesh_at(p["fine_h"]), mat)
        refined = E.refine(fine, [c.omega for c in cands])
        for r, c in zip(refined, cands):
            r.threshold = c.threshold
        cands, system = refined, fine
    else:
        system = coarse
    E.write_scan_csv(record, run.path("scan.csv"))
    out = [c.to_json() for c in cands]
    run.check("candidates_found", len(cands) > 0)
    if typ == "disk":
        roots = E.disk_eigenvalues(p["interval"], p["geometry.radius"], mat)
        for c, o in zip(cands, out):
            r = min(roots, key=lambda r: abs(r.omega - c.omega))
            o.update(oracle=r.omega, mode=r.n, relative_delta=abs(c.omega - r.omega) / r.omega)
        run.check("disk_oracle", all(o["relative_delta"] < p["oracle_tol"] for o in out))
    else:
        for c, o in zip(cands, out):
            diags = E.corner_report(c, system, p["probe_factor"])
            o["corners"] = [d.to_json() for d in diags]
    run.write_json("candidates.json", out)


def cmd_visibility(run: Run) -> None:
    from . import forward as F

    p = run.cfg.params
    mat = run.cfg.materials()
    polys = _scene_polygons(mat)
    unknown = set(p["scenes"]) - set(polys)
    if unknown:
        raise ConfigError(f"scenes: unknown {sorted(unknown)}")
    angles = 2 * math.pi * np.arange(p["n_angles"]) / p["n_angles"]
    jobs = [(name, kd) for name in p["scenes"] for kd in p["ks_diam"]]

    def work(job):
        name, kd = job
        poly = polys[name]
        return F.visibility_experiment({name: poly}, mat, lambda q: kd / (q.diameter * mat.ks(1.0)), angles,
                                       p["kind"], p["threshold"], p["n_dir"])

    with ThreadPoolExecutor(max_workers=max(1, run.manifest.threads)) as ex:
        results = list(ex.map(work, jobs))
    rows = [dict(r, ks_diam=kd) for (name, kd), res in zip(jobs, results) for r in res]
    run.write_rows("visibility.csv", ["scene", "ks_diam", "omega", "angle", "kind", "norm", "threshold", "visible"],
                   ([r["scene"], r["ks_diam"], r["omega"], r["angle"], r["kind"], r["norm"], r["threshold"],
                     int(r["visible"])] for r in rows))
    gated = p["gated"] if p["gated"] is not None else p["kind"] == "compressional"
    if gated:
        run.check("all_visible", all(r["visible"] for r in rows))
    run.write_json("summary.json", {"n_cases": len(rows), "n_visible": sum(r["visible"] for r in rows),
                                    "min_norm": min(r["norm"] for r in rows), "gated": gated})


def cmd_identify(run: Run) -> None:
    from . import forward as F

    p = run.cfg.params
    mat = run.cfg.materials()
    polys = _scene_polygons(mat)
    tri, sq = polys["triangle"], polys["square"]
    omega = p["ks_diam"] / (tri.diameter * mat.ks(1.0))
    diff = F.identifiability_experiment(tri, sq, mat, omega, p["angles"], p["n_dir"])
    same = F.identifiability_experiment(tri, tri, mat, omega, p["angles"], p["n_dir"])
    run.check("distinguishable", diff["mismatch"] > p["threshold"])
    run.check("identical_consistent", same["mismatch"] < p["identical_tol"])
    run.write_rows("identify.csv", ["angle", "triangle_vs_square", "triangle_vs_triangle"],
                   zip(p["angles"], diff["per_direction"], same["per_direction"]))
    run.write_json("summary.json", {"omega": omega, "different": diff, "identical": same,
                                    "areas": [tri.area, sq.area]})


def cmd_edge3d(run: Run) -> None:
    from . import edge3d as E

    p = run.cfg.params
    mat = run.cfg.materials()
    H = p["half_height"]
    try:
        bump = E.BumpProfile(p["bump.center"], p["bump.half_width"])
    except ValueError as exc:
        raise ConfigError(f"bump: {exc}") from None
    if not (-H < bump.support[0] and bump.support[1] < H):
        raise ConfigError("bump support must lie inside (-half_height, half_height)")
    nq, om = p["n_quad"], p["omega"]
    pts = run.rng.uniform(-0.5, 0.5, size=(p["n_points"], 2))
    report: dict = {}

    f = E.Field3(lambda x: np.exp(x[:, 0]) * np.sin(x[:, 2]) + x[:, 1] ** 2 * np.cos(x[:, 2]), 1, H)
    g = E.Field3(lambda x: np.cos(x[:, 0] + x[:, 1]) * x[:, 2] ** 2, 1, H)
    lin = E.Field3(lambda x: 2.0 * f.fn(x) - 3.0 * g.fn(x), 1, H)
    lin_def = float(np.max(np.abs(E.reduce(lin, bump, nq)(pts)
                                  - 2.0 * E.reduce(f, bump, nq)(pts) + 3.0 * E.reduce(g, bump, nq)(pts))))
    comm = max(E.commutation_defect(f, bump, x, i, nq) for x in pts for i in (0, 1))
    ibp = E.by_parts_defect(f, lambda x: np.exp(x[:, 0]) * np.cos(x[:, 2]) - x[:, 1] ** 2 * np.sin(x[:, 2]),
                            bump, pts, nq)
    report["identities"] = {"linearity": lin_def, "commutation": comm, "by_parts": ibp}
    tol = p["identity_tol"]
    run.check("linearity", lin_def < tol)
    run.check("commutation", comm < tol)
    run.check("by_parts", ibp < tol)

    grid = pts * 0.5
    dirs = [(1.0, 0.5, 0.0), (0.3, 0.4, 0.8), (0.0, 0.2, 1.0)]
    res_rows = []
    for d in dirs:
        v = E.acoustic_wave(d, om, mat, H)
        for kind in ("compressional", "shear"):
            if kind == "compressional":
                u, gu = E.compressional_wave(d, om, mat, H)
            else:
                u, gu = E.shear_wave(d, (0.0, 0.0, 1.0) if d[2] == 0 else (1.0, 0.0, 0.0), om, mat, H)
            r = E.reduced_residual(u, gu, v, bump, mat, om, grid, nq)
            res_rows.append([kind, *d, r.relative["u12"], r.relative["u3"], r.relative["v"]])
    run.write_rows("reduced_residuals.csv", ["kind", "d1", "d2", "d3", "rel_u12", "rel_u3", "rel_v"], res_rows)
    run.check("reduced_residuals", max(max(r[4:]) for r in res_rows) < p["residual_tol"])

    lam_mu = mat.lam + mat.mu
    cases = {
        "diagonal": (np.diag([0.3, 0.3, 0.0]), -2 * lam_mu * 0.3, {"a": True, "b": True, "c": False, "d": False}),
        "zero": (np.zeros((3, 3)), 0.0, {"a": True, "b": True, "c": True, "d": True}),
        "rotation": (np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]), 0.0,
                     {"a": True, "b": True, "c": True, "d": False}),
    }
    rel = {}
    ok = True
    for name, (A_, v0, expect) in cases.items():
        rep = E.edge_corner_relations(A_, v0, mat)
        cls = rep.classify()
        ok &= all(cls[k] == expect[k] for k in expect)
        rel[name] = rep.to_json()
    run.check("relations_classified", ok)
    report["relations"] = rel
    run.write_json("edge3d.json", report)


COMMANDS = {
    "asymptotics": cmd_asymptotics,
    "identity": cmd_identity,
    "forward": cmd_forward,
    "eigs": cmd_eigs,
    "visibility": cmd_visibility,
    "identify": cmd_identify,
    "edge3d": cmd_edge3d,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="acoustoelastic", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="key = value config file")
    ap.add_argument("--out", type=Path, help="output directory (default out/<command>)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--strict", action="store_true", help="treat warnings as errors")
    return ap


def run_command(command: str, config_text: str = "", out: Path | str | None = None, seed: int = 0,
                threads: int = 1, strict: bool = False) -> RunManifest:
    """Programmatic equivalent of the CLI; raises ConfigError on bad configs."""
    cfg = parse_config(command, config_text)
    run = Run(cfg, Path(out) if out is not None else Path("out") / command, seed, threads)
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        if strict:
            warnings.simplefilter("error")
        COMMANDS[command](run)
    run.manifest.wall_time = time.perf_counter() - t0
    with open(run.out / "manifest.json", "w") as fh:
        json.dump(run.manifest.to_json(), fh, indent=2)
    return run.manifest


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    try:
        man = run_command(args.command, text, args.out, args.seed, args.threads, args.strict)
    except ConfigError as exc:
        where = f"{args.config}: " if args.config else ""
        print(f"config error: {where}{exc}", file=sys.stderr)
        return 2
    for name, ok in man.checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"{args.command}: {'all checks passed' if man.passed else 'FAILED'} ({man.wall_time:.1f} s)")
    return 0 if man.passed else 1


if __name__ == "__main__":
    sys.exit(main())
