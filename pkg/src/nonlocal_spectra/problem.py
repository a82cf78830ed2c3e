"""Declarative problem description shared by the library API and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .assembly import DiscreteOperator, assemble_operator
from .coefficients import CoefficientField
from .errors import ConfigParse, HaloTooSmall
from .expressions import compile_expression
from .grid import Annulus, Ball, Box, Domain, Interval, SpatialGrid, build_grid
from .kernels import JumpKernel, uniform_density

COMMANDS = ("eig", "sweep", "exterior", "mp", "semilinear", "harnack",
            "classify", "oracle", "compare")


@dataclass
class ProblemSpec:
    """Domain, coefficients, jump kernel and solver parameters for one run."""

    dimension: int
    domain: Optional[Domain]
    h: float
    halo: Optional[float]            # None: derive from the kernel support
    a: object = 1.0                   # scalar or callable(points)
    b: object = 0.0
    c: object = 0.0
    kernel: JumpKernel = None
    seed: int = 0
    command: str = "eig"
    params: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kernel is None:
            self.kernel = JumpKernel.none(self.dimension)

    # -- assembly pipeline ------------------------------------------------------

    def halo_for(self, domain: Domain, h: float) -> float:
        probe = _support_probe(domain, self.kernel, h)
        needed = self.kernel.max_support_radius(probe)
        if self.halo is None:
            return needed
        if self.halo + 1e-12 < needed:
            raise HaloTooSmall(
                f"declared halo {self.halo:g} is below the kernel support "
                f"radius {needed:g}")
        return self.halo

    def grid(self, domain: Optional[Domain] = None, h: Optional[float] = None
             ) -> SpatialGrid:
        domain = domain or self.domain
        h = h or self.h
        if domain is None:
            raise ConfigParse("problem has no domain")
        return build_grid(domain, h, self.halo_for(domain, h))

    def coefficients(self, grid: SpatialGrid) -> CoefficientField:
        return CoefficientField.sample(grid, a=self.a, b=self.b, c=self.c)

    def operator(self, domain: Optional[Domain] = None, h: Optional[float] = None,
                 variant: str = "full") -> DiscreteOperator:
        grid = self.grid(domain, h)
        return assemble_operator(grid, self.coefficients(grid), self.kernel, variant)

    def with_potential(self, c) -> "ProblemSpec":
        """Copy of the problem with the potential replaced (sweep comparisons)."""
        return ProblemSpec(dimension=self.dimension, domain=self.domain,
                           h=self.h, halo=self.halo, a=self.a, b=self.b, c=c,
                           kernel=self.kernel, seed=self.seed,
                           command=self.command, params=dict(self.params),
                           output=dict(self.output))


def _support_probe(domain: Domain, kernel: JumpKernel, h: float) -> np.ndarray:
    """Sample points spanning the domain for position-dependent supports."""
    lo, hi = domain.bounding_box()
    d = domain.dimension
    axes = [np.linspace(lo[k], hi[k], 33) for k in range(d)]
    if d == 1:
        return axes[0].reshape(-1, 1)
    gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


# -- config ingestion -------------------------------------------------------------

def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigParse(f"missing key {key!r} in [{where}]")
    return section[key]


def _domain_from_config(section: dict, dimension: int) -> Domain:
    shape = _require(section, "shape", "domain")
    if shape == "interval":
        return Interval(float(_require(section, "left", "domain")),
                        float(_require(section, "right", "domain")))
    if shape == "ball":
        r = float(_require(section, "radius", "domain"))
        return Interval(-r, r) if dimension == 1 else Ball(r, dimension=2)
    if shape == "box":
        ext = _require(section, "extents", "domain")
        return Box(tuple(tuple(float(v) for v in pair) for pair in ext))
    if shape == "annulus":
        return Annulus(float(_require(section, "inner", "domain")),
                       float(_require(section, "outer", "domain")),
                       dimension=dimension)
    raise ConfigParse(f"unknown domain shape {shape!r}")


def _coefficient_entry(value, dimension: int, names: tuple):
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        expr = compile_expression(value, names)

        def fn(points, _expr=expr):
            pts = np.asarray(points, dtype=float).reshape(-1, dimension)
            env = {"x": pts[:, 0]}
            if dimension == 2:
                env["y"] = pts[:, 1]
            return np.broadcast_to(np.asarray(_expr(**{k: env[k] for k in names
                                                       if k in env}),
                                              dtype=float), (len(pts),)).copy()

        return fn
    raise ConfigParse(f"coefficient entries are numbers or expressions, got {value!r}")


def _drift_from_config(value, dimension: int, names: tuple):
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        comp = _coefficient_entry(value, dimension, names)

        def fn(points):
            vals = comp(points)
            return np.column_stack([vals] * dimension) if dimension == 2 else vals

        return fn
    if isinstance(value, (list, tuple)):
        comps = [_coefficient_entry(v, dimension, names) for v in value]
        if len(comps) != dimension:
            raise ConfigParse("drift vector length must match the dimension")

        def fn(points):
            pts = np.asarray(points, dtype=float).reshape(-1, dimension)
            cols = [c(pts) if callable(c) else np.full(len(pts), c) for c in comps]
            return np.column_stack(cols)

        return fn
    raise ConfigParse(f"cannot interpret drift specification {value!r}")


def _kernel_from_config(section: dict, dimension: int) -> JumpKernel:
    variant = _require(section, "variant", "kernel")
    if variant == "none":
        return JumpKernel.none(dimension)
    if variant == "atomic":
        offsets = _require(section, "offsets", "kernel")
        weights = _require(section, "weights", "kernel")
        offsets = [[o] if isinstance(o, (int, float)) else o for o in offsets]
        return JumpKernel.atomic(offsets, weights, dimension)
    if variant == "uniform":
        return uniform_density(float(_require(section, "mass", "kernel")),
                               float(_require(section, "radius", "kernel")),
                               dimension)
    if variant == "density":
        gsrc = _require(section, "g", "kernel")
        support = _require(section, "support", "kernel")
        pos_names = ("x",) if dimension == 1 else ("x", "y")
        off_names = ("z",) if dimension == 1 else ("zx", "zy")
        expr = compile_expression(gsrc, pos_names + off_names)

        def g(pts, offs, _expr=expr):
            pts = np.asarray(pts, dtype=float).reshape(-1, dimension)
            offs = np.asarray(offs, dtype=float).reshape(-1, dimension)
            if dimension == 1:
                env = {"x": pts[:, 0:1], "z": offs[None, :, 0]}
            else:
                env = {"x": pts[:, 0:1], "y": pts[:, 1:2],
                       "zx": offs[None, :, 0], "zy": offs[None, :, 1]}
            vals = _expr(**{k: env[k] for k in _expr.variables})
            return np.broadcast_to(np.asarray(vals, dtype=float),
                                   (len(pts), len(offs))).copy()

        if isinstance(support, str):
            sup_expr = compile_expression(support, pos_names)

            def support_fn(points, _e=sup_expr):
                pts = np.asarray(points, dtype=float).reshape(-1, dimension)
                env = {"x": pts[:, 0]}
                if dimension == 2:
                    env["y"] = pts[:, 1]
                vals = _e(**{k: env[k] for k in _e.variables})
                return np.broadcast_to(np.asarray(vals, dtype=float),
                                       (len(pts),)).copy()

            support_arg = support_fn
        else:
            support_arg = float(support)
        return JumpKernel.from_density(g, support_arg, dimension,
                                       name=f"density({gsrc})")
    raise ConfigParse(f"unknown kernel variant {variant!r}")


def problem_from_config(config: dict) -> ProblemSpec:
    """Validate a parsed config mapping and build the problem it describes."""
    for key in ("domain", "grid", "command"):
        if key not in config:
            raise ConfigParse(f"missing section [{key}]")
    domain_sec = dict(config["domain"])
    dimension = int(domain_sec.pop("dimension", 1))
    if dimension not in (1, 2):
        raise ConfigParse(f"dimension must be 1 or 2, got {dimension}")
    domain = _domain_from_config(domain_sec, dimension)
    grid_sec = config["grid"]
    h = float(_require(grid_sec, "h", "grid"))
    halo = grid_sec.get("halo", "auto")
    halo = None if halo == "auto" else float(halo)
    coeff_sec = config.get("coefficients", {})
    names = ("x",) if dimension == 1 else ("x", "y")
    a = _coefficient_entry(coeff_sec.get("a", 1.0), dimension, names)
    b = _drift_from_config(coeff_sec.get("b", 0.0), dimension, names)
    c = _coefficient_entry(coeff_sec.get("c", 0.0), dimension, names)
    kernel = _kernel_from_config(config.get("kernel", {"variant": "none"}),
                                 dimension)
    command_sec = dict(config["command"])
    command = _require(command_sec, "name", "command")
    if command not in COMMANDS:
        raise ConfigParse(
            f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    command_sec.pop("name")
    return ProblemSpec(dimension=dimension, domain=domain, h=h, halo=halo,
                       a=a, b=b, c=c, kernel=kernel,
                       seed=int(config.get("seed", 0)),
                       command=command, params=command_sec,
                       output=dict(config.get("output", {})))
