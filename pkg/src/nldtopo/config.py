"""Strict YAML run configuration.

A document names either a builtin benchmark (optionally with parameter
overrides) or spells out the mesh / problem / phases blocks explicitly.
Unknown keys are rejected everywhere, and physical parameter validation is
delegated to the dataclass constructors so error messages cite the
offending field and its admissible range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import yaml

from .errors import ConfigError
from .evolve import EvolveParams
from .levelset import SmoothingParams
from .mesh import BoundaryRegion, generate_rect
from .optimizer import (
    BENCHMARKS,
    INIT_KINDS,
    Phase,
    ProblemSpec,
    RunSetup,
    StopRule,
    benchmark,
    override_params,
)
from .physics import ElasticitySpec, HeatSpec

TOP_KEYS = ("benchmark", "nx", "ny", "overrides", "mesh", "problem", "smoothing",
            "phases", "stop", "init", "fixed_material_tags", "output_dir",
            "snapshot_every", "snapshot_formats")
OVERRIDE_KEYS = ("scheme", "q", "q_tilde", "tau", "rho", "dt", "xi", "p", "gamma", "h",
                 "max_steps", "k_eps", "init")
PHASE_KEYS = ("scheme", "q", "q_tilde", "tau", "rho", "dt", "xi", "p", "gamma", "h", "until")
MESH_KEYS = ("nx", "ny", "width", "height", "regions")
REGION_KEYS = ("tag", "side", "lo", "hi")
STOP_KEYS = ("k_eps", "warmup", "max_steps", "norm_region", "patience")
SMOOTHING_KEYS = ("delta", "eta", "chi_floor", "delta_mode")
ELASTIC_KEYS = ("kind", "g_max", "mu", "young", "poisson", "traction", "traction_tag",
                "dirichlet", "spring_in", "spring_out", "out_traction")
HEAT_KEYS = ("kind", "g_max", "mu", "alpha", "beta", "source", "dirichlet")


def _check_keys(d: dict, allowed, ctx: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{ctx}: expected a mapping, got {type(d).__name__}")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"{ctx}: unknown key(s) {unknown}; allowed: {sorted(allowed)}")


@dataclass
class RunConfig:
    """Validated configuration; ``data`` is the normalized document."""

    data: dict

    @property
    def output_dir(self):
        return self.data.get("output_dir")

    @property
    def snapshot_every(self) -> int:
        return int(self.data.get("snapshot_every", 10))

    @property
    def snapshot_formats(self) -> tuple:
        return tuple(self.data.get("snapshot_formats", ["pgm", "vtk_legacy_ascii"]))

    def build(self) -> RunSetup:
        return _build_setup(self.data)

    def serialize(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML run document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"config parse error{where}: {exc}") from exc
    if doc is None:
        doc = {}
    _check_keys(doc, TOP_KEYS, "config")
    has_benchmark = "benchmark" in doc
    has_explicit = any(k in doc for k in ("mesh", "problem", "phases"))
    if has_benchmark and has_explicit:
        raise ConfigError("config: give either 'benchmark' or explicit blocks, not both")
    if not has_benchmark and not has_explicit:
        raise ConfigError("config: required keys missing; provide 'benchmark: <name>' "
                          "or the explicit 'mesh', 'problem' and 'phases' blocks")
    _build_setup(doc)   # full validation up front
    return RunConfig(data=doc)


def _build_setup(doc: dict) -> RunSetup:
    if "benchmark" in doc:
        name = doc["benchmark"]
        if name not in BENCHMARKS:
            raise ConfigError(f"benchmark: unknown name {name!r}; known: {list(BENCHMARKS)}")
        setup = benchmark(name, nx=doc.get("nx"), ny=doc.get("ny"))
        overrides = dict(doc.get("overrides") or {})
        _check_keys(overrides, OVERRIDE_KEYS, "overrides")
        init = overrides.pop("init", None)
        max_steps = overrides.pop("max_steps", None)
        k_eps = overrides.pop("k_eps", None)
        if overrides:
            setup = override_params(setup, **overrides)
        stop = setup.stop
        if max_steps is not None or k_eps is not None:
            stop = replace(stop,
                           max_steps=int(max_steps) if max_steps is not None else stop.max_steps,
                           k_eps=float(k_eps) if k_eps is not None else stop.k_eps)
        setup = replace(setup, stop=stop)
        if init is not None:
            if init not in INIT_KINDS:
                raise ConfigError(f"overrides.init: unknown kind {init!r}")
            setup = replace(setup, init_kind=init)
        return setup

    for key in ("mesh", "problem", "phases"):
        if key not in doc:
            raise ConfigError(f"config: explicit mode requires the {key!r} block")
    mesh = _parse_mesh(doc["mesh"])
    problem = _parse_problem(doc["problem"])
    phases = _parse_phases(doc["phases"])
    stop = _parse_stop(doc.get("stop") or {})
    smoothing = _parse_smoothing(doc.get("smoothing") or {})
    init = doc.get("init", "full")
    if init not in INIT_KINDS:
        raise ConfigError(f"init: unknown kind {init!r}, expected one of {INIT_KINDS}")
    tags = tuple(doc.get("fixed_material_tags") or ())
    known = mesh.tags()
    for t in tags:
        if t not in known:
            raise ConfigError(f"fixed_material_tags: tag {t!r} not present on the mesh")
    return RunSetup("custom", mesh, problem, phases, stop, init,
                    smoothing=smoothing, fixed_material_tags=tags)


def _parse_mesh(block):
    _check_keys(block, MESH_KEYS, "mesh")
    regions = []
    for i, r in enumerate(block.get("regions") or []):
        _check_keys(r, REGION_KEYS, f"mesh.regions[{i}]")
        regions.append(BoundaryRegion(str(r["tag"]), str(r["side"]),
                                      float(r["lo"]), float(r["hi"])))
    try:
        return generate_rect(int(block["nx"]), int(block["ny"]),
                             float(block["width"]), float(block["height"]), regions)
    except KeyError as exc:
        raise ConfigError(f"mesh: missing key {exc.args[0]!r}") from exc


def _parse_spring(value, ctx):
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{ctx}: expected [tag, stiffness] with a scalar or 2x2 matrix")
    tag, k = value
    k = np.asarray(k, dtype=float)
    if k.ndim == 0:
        k = float(k) * np.eye(2)
    if k.shape != (2, 2):
        raise ConfigError(f"{ctx}: stiffness must be a scalar or a 2x2 matrix")
    return (str(tag), k)


def _parse_problem(block):
    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigError("problem: missing required key 'kind'")
    kind = block["kind"]
    g_max = float(block.get("g_max", 0.5))
    mu = float(block.get("mu", 3.0))
    if kind == "heat":
        _check_keys(block, HEAT_KEYS, "problem")
        spec = HeatSpec(alpha=float(block.get("alpha", 1.0)),
                        beta=float(block.get("beta", 1e-2)),
                        source=float(block.get("source", 1.0)),
                        dirichlet=tuple(block.get("dirichlet") or ("free",)))
        return ProblemSpec(kind="heat", heat=spec, g_max=g_max, mu=mu)
    if kind in ("compliance", "mechanism"):
        _check_keys(block, ELASTIC_KEYS, "problem")
        dirichlet = tuple((str(t), tuple(int(c) for c in comps))
                          for t, comps in (block.get("dirichlet") or [["clamp", [0, 1]]]))
        out = block.get("out_traction")
        spec = ElasticitySpec(
            young=float(block.get("young", 2.1e11)),
            poisson=float(block.get("poisson", 0.3)),
            traction=tuple(float(v) for v in block.get("traction", (0.0, -1.0e3))),
            traction_tag=str(block.get("traction_tag", "load")),
            dirichlet=dirichlet,
            spring_in=_parse_spring(block.get("spring_in"), "problem.spring_in"),
            spring_out=_parse_spring(block.get("spring_out"), "problem.spring_out"),
            out_traction=(str(out[0]), tuple(float(v) for v in out[1])) if out else None,
        )
        return ProblemSpec(kind=kind, elasticity=spec, g_max=g_max, mu=mu)
    raise ConfigError(f"problem.kind: unknown kind {kind!r}")


def _parse_phases(blocks):
    if not isinstance(blocks, list) or not blocks:
        raise ConfigError("phases: expected a nonempty list")
    phases = []
    for i, b in enumerate(blocks):
        _check_keys(b, PHASE_KEYS, f"phases[{i}]")
        until = b.get("until", math.inf)
        kw = {k: v for k, v in b.items() if k != "until"}
        phases.append(Phase(EvolveParams(**kw), float(until)))
    return tuple(phases)


def _parse_stop(block):
    _check_keys(block, STOP_KEYS, "stop")
    region = block.get("norm_region", "domain")
    if isinstance(region, dict):
        if list(region) == ["abs"]:
            region = ("abs", float(region["abs"]))
        elif list(region) == ["range"]:
            lo, hi = region["range"]
            region = ("range", float(lo), float(hi))
        else:
            raise ConfigError("stop.norm_region: expected 'domain', {abs: c} or {range: [lo, hi]}")
    elif region != "domain":
        raise ConfigError(f"stop.norm_region: unknown region {region!r}")
    return StopRule(k_eps=float(block.get("k_eps", 1e-2)),
                    warmup=int(block.get("warmup", 10)),
                    max_steps=int(block.get("max_steps", 1000)),
                    norm_region=region,
                    patience=int(block.get("patience", 5)))


def _parse_smoothing(block):
    _check_keys(block, SMOOTHING_KEYS, "smoothing")
    return SmoothingParams(delta=float(block.get("delta", 0.8)),
                           eta=float(block.get("eta", 1.0)),
                           chi_floor=float(block.get("chi_floor", 1e-3)),
                           delta_mode=str(block.get("delta_mode", "uniform")))
