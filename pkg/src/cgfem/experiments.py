"""Experiment records and suite runners shared by the CLI and tests."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .analysis import (
    convergence_slope,
    crack_problem,
    energy_error,
    scaled_condition_number,
    smooth_problem,
)
from .assembly import (
    TIP_DEPTH_ASSEMBLY,
    TIP_DEPTH_ERROR,
    assemble_load,
    assemble_stiffness,
    assembly_rules,
    boundary_edge_rules,
    solve_neumann,
)
from .errors import DegenerateDataError
from .mesh import build_crack_mesh, build_perturbed_mesh, build_uniform_mesh
from .spaces import (
    build_cgfem_space,
    build_crack_cgfem_space,
    build_crack_gfem_space,
    build_fem_space,
    build_ftgfem_space,
    build_sgfem_space,
)

SMOOTH_METHODS = ("fem", "ftgfem", "sgfem", "cgfem")
CRACK_METHODS = ("fem", "crack_gfem", "crack_cgfem")

CSV_HEADER = "method,k,mesh,N,h,dof,EE,SCN,assembly_s,solve_s"


@dataclass
class ExperimentRecord:
    method: str
    k: int
    mesh_kind: str
    size: int
    h: float
    dof: int
    ee: float = math.nan
    scn: float = math.nan
    assembly_s: float = 0.0
    solve_s: float = 0.0
    error: str = ""

    def csv_row(self, zero_timings=False):
        a = 0.0 if zero_timings else self.assembly_s
        s = 0.0 if zero_timings else self.solve_s
        return (
            f"{self.method},{self.k},{self.mesh_kind},{self.size},"
            f"{self.h:.12e},{self.dof},{self.ee:.12e},{self.scn:.12e},"
            f"{a:.3f},{s:.3f}"
        )


@dataclass
class ExperimentConfig:
    """Settings for one suite run; validated against the method catalog."""

    suite: str = "smooth"
    methods: tuple = SMOOTH_METHODS
    degrees: tuple = (1, 2, 3)
    mesh_kinds: tuple = ("uniform", "perturbed")
    sizes: tuple = (8, 16, 32, 64)  # N values (smooth) or j values (crack)
    sigma: float = 0.2
    ft_l: int = 1
    radius: float = 0.25
    seed: int = 0
    perturbation: float = 0.1
    tip_depth: int = TIP_DEPTH_ASSEMBLY
    tip_depth_error: int = TIP_DEPTH_ERROR
    compute_scn: bool = True
    scn_dense_limit: int = 3000
    zero_timings: bool = False

    def validate(self):
        if self.suite not in ("smooth", "crack"):
            raise ValueError(f"unknown suite {self.suite!r}")
        catalog = SMOOTH_METHODS if self.suite == "smooth" else CRACK_METHODS
        for m in self.methods:
            if m not in catalog:
                raise ValueError(f"method {m!r} not available in {self.suite} suite")
        if self.suite == "crack":
            if tuple(self.degrees) != (1,):
                raise ValueError("the crack suite is restricted to degree 1")
            if tuple(self.mesh_kinds) != ("uniform",):
                raise ValueError("the crack suite runs on uniform meshes only")
        return self


def _smooth_space(mesh, method, k, sigma, ft_l):
    if method == "fem":
        return build_fem_space(mesh, k)
    if method == "ftgfem":
        return build_ftgfem_space(mesh, k, sigma, ft_l)
    if method == "sgfem":
        return build_sgfem_space(mesh, k, sigma, ft_l)
    if method == "cgfem":
        return build_cgfem_space(mesh, k)
    raise ValueError(f"unknown smooth method {method!r}")


def run_smooth_case(method, k, mesh_kind, N, *, sigma=0.2, ft_l=1, seed=0,
                    perturbation=0.1, compute_scn=True, scn_dense_limit=3000,
                    cg_tol=1e-12):
    """One (method, degree, mesh kind, N) record of the smooth suite."""
    if mesh_kind == "uniform":
        mesh = build_uniform_mesh(N)
    elif mesh_kind == "perturbed":
        mesh = build_perturbed_mesh(N, perturbation, seed)
    else:
        raise ValueError(f"unknown mesh kind {mesh_kind!r}")
    problem = smooth_problem()

    t0 = time.perf_counter()
    space = _smooth_space(mesh, method, k, sigma, ft_l)
    profile = space.quadrature_profile()
    rules = assembly_rules(mesh, profile)
    edges = boundary_edge_rules(mesh, profile.points_per_axis)
    A = assemble_stiffness(space, rules)
    b = assemble_load(space, problem, rules, edges)
    z = space.constant_vector()
    t1 = time.perf_counter()
    x = solve_neumann(A, b, z, tol=cg_tol)
    t2 = time.perf_counter()

    err_rules = assembly_rules(mesh, profile, purpose="error")
    ee = energy_error(space, x, problem, err_rules)
    scn = math.nan
    if compute_scn:
        scn = scaled_condition_number(A, z, dense_limit=scn_dense_limit)
    return ExperimentRecord(
        method=method, k=k, mesh_kind=mesh_kind, size=N, h=mesh.h,
        dof=space.dof_count, ee=ee, scn=scn,
        assembly_s=t1 - t0, solve_s=t2 - t1,
    )


def _crack_space(crack, method):
    if method == "fem":
        return build_fem_space(crack.base, 1)
    if method == "crack_gfem":
        return build_crack_gfem_space(crack)
    if method == "crack_cgfem":
        return build_crack_cgfem_space(crack)
    raise ValueError(f"unknown crack method {method!r}")


def run_crack_case(method, n, *, radius=0.25, tip_depth=TIP_DEPTH_ASSEMBLY,
                   tip_depth_error=TIP_DEPTH_ERROR, compute_scn=True,
                   scn_dense_limit=3000, cg_tol=1e-12):
    """One (method, n) record of the crack suite (degree 1)."""
    crack = build_crack_mesh(n, radius)
    mesh = crack.base
    problem = crack_problem()

    t0 = time.perf_counter()
    space = _crack_space(crack, method)
    profile = space.quadrature_profile()
    rules = assembly_rules(mesh, profile, crack=crack, tip_depth=tip_depth)
    edges = boundary_edge_rules(mesh, profile.points_per_axis, crack=crack)
    A = assemble_stiffness(space, rules)
    b = assemble_load(space, problem, rules, edges)
    z = space.constant_vector()
    t1 = time.perf_counter()
    x = solve_neumann(A, b, z, tol=cg_tol)
    t2 = time.perf_counter()

    err_rules = assembly_rules(
        mesh, profile, crack=crack, purpose="error", tip_depth=tip_depth_error
    )
    ee = energy_error(space, x, problem, err_rules)
    scn = math.nan
    if compute_scn:
        scn = scaled_condition_number(A, z, dense_limit=scn_dense_limit)
    return ExperimentRecord(
        method=method, k=1, mesh_kind="uniform", size=n, h=mesh.h,
        dof=space.dof_count, ee=ee, scn=scn,
        assembly_s=t1 - t0, solve_s=t2 - t1,
    )


def crack_sizes(j_values):
    """Mesh parameters n = 2^(j+1) + 1 of the crack refinement family."""
    return tuple(2 ** (j + 1) + 1 for j in j_values)


def run_smooth_suite(config: ExperimentConfig):
    """Records in deterministic config order; failures become error records."""
    config.validate()
    records = []
    for mesh_kind in config.mesh_kinds:
        for method in config.methods:
            for k in config.degrees:
                for N in config.sizes:
                    try:
                        rec = run_smooth_case(
                            method, k, mesh_kind, N,
                            sigma=config.sigma, ft_l=config.ft_l,
                            seed=config.seed, perturbation=config.perturbation,
                            compute_scn=config.compute_scn,
                            scn_dense_limit=config.scn_dense_limit,
                        )
                    except Exception as exc:  # noqa: BLE001 - isolate records
                        rec = ExperimentRecord(
                            method=method, k=k, mesh_kind=mesh_kind, size=N,
                            h=1.0 / N, dof=0, error=str(exc),
                        )
                    records.append(rec)
    return records


def run_crack_suite(config: ExperimentConfig):
    config.validate()
    records = []
    for method in config.methods:
        for n in crack_sizes(config.sizes):
            try:
                rec = run_crack_case(
                    method, n, radius=config.radius,
                    tip_depth=config.tip_depth,
                    tip_depth_error=config.tip_depth_error,
                    compute_scn=config.compute_scn,
                    scn_dense_limit=config.scn_dense_limit,
                )
            except Exception as exc:  # noqa: BLE001 - isolate records
                rec = ExperimentRecord(
                    method=method, k=1, mesh_kind="uniform", size=n,
                    h=2.0 / n, dof=0, error=str(exc),
                )
            records.append(rec)
    return records


def slope_summaries(records):
    """(method, k, mesh, quantity, text) fitted-slope lines per curve."""
    groups = {}
    for r in records:
        if r.error:
            continue
        groups.setdefault((r.method, r.k, r.mesh_kind), []).append(r)
    out = []
    for (method, k, mesh_kind), recs in sorted(groups.items()):
        hs = [r.h for r in recs]
        for quantity, values in (
            ("EE", [r.ee for r in recs]),
            ("SCN", [r.scn for r in recs]),
        ):
            if len(recs) < 3 or any(math.isnan(v) for v in values):
                continue
            try:
                text = f"{convergence_slope(hs, values):.4f}"
            except DegenerateDataError:
                text = "exact"
            out.append((method, k, mesh_kind, quantity, text))
    return out


def write_csv(records, f, zero_timings=False):
    """CSV rows plus #slope summary lines and #error lines for failures."""
    f.write(CSV_HEADER + "\n")
    for r in records:
        f.write(r.csv_row(zero_timings=zero_timings) + "\n")
    for method, k, mesh_kind, quantity, text in slope_summaries(records):
        f.write(f"#slope,{method},{k},{mesh_kind},{quantity},{text}\n")
    for r in records:
        if r.error:
            msg = r.error.replace("\n", " ").replace(",", ";")
            f.write(f"#error,{r.method},{r.k},{r.mesh_kind},{r.size},{msg}\n")
