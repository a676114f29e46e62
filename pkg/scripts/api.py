"""
Certification API Layer

Parses and validates run configurations, builds per-parameter instances
from the catalog, runs sweeps and stores their results. Used by the CLI and
by the test suite.
"""

import json
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from catalog import (
    CATALOG,
    CatalogEntry,
    FieldSpec,
    build_field,
    custom_entry,
    get_entry,
    transport_entry,
)
from certify import (
    BoundReport,
    CertifySettings,
    Instance,
    QuadratureSettings,
    StabilityConstants,
    SweepResult,
    elliptic_constants,
    parabolic_constants,
    sweep,
)
from config import Config, get_config
from errors import CertifyError, ConfigurationError
from geometry import Polygon, Rect, load_polygon, poincare_bound, polygon_from_dict, verify_embedding
from logger import logger
from residual import SpaceTimeProblem
from storage import ReportStorage, RunStorage

SCHEMA_VERSION = 1
KNOWN_KEYS = {
    "schema_version", "problem", "polygon", "coefficients", "embedding", "field", "parameters",
    "orders", "quadrature", "parabolic_constants", "oracle", "output", "workers", "seed",
    "report_tolerance",
}
QUADRATURE_KEYS = {"inner_points", "triangle_order", "refine_levels", "time_points"}

Order = Tuple[int, int]


def _key_line(text: str, path: Sequence[str]) -> Optional[int]:
    """1-based line of the last key in `path`, searching after each parent key."""
    pos = 0
    for key in path:
        found = text.find(f'"{key}"', pos)
        if found < 0:
            return None
        pos = found
    return text.count("\n", 0, pos) + 1


@dataclass
class RunConfig:
    """A validated run configuration."""

    problem: str
    entry: CatalogEntry
    field: FieldSpec
    parameters: List[Tuple[float, ...]]
    inner_order: Order = (12, 12)
    outer_order: Order = (12, 12)
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    constants: Optional[StabilityConstants] = None
    oracle: bool = False
    oracle_levels: int = 3
    domain_reference: bool = False
    report_tolerance: float = 1e-8
    inner: Optional[Rect] = None
    outer: Optional[Rect] = None
    output: Optional[Path] = None
    workers: Optional[int] = None
    seed: int = 0
    source: Optional[Path] = None
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def mu_names(self) -> Tuple[str, ...]:
        return self.entry.parameters.names

    def settings(self) -> CertifySettings:
        return CertifySettings(
            inner_order=self.inner_order,
            outer_order=self.outer_order,
            quadrature=self.quadrature,
            oracle=self.oracle,
            oracle_levels=self.oracle_levels,
            domain_reference=self.domain_reference,
            report_tolerance=self.report_tolerance,
        )


class _Parser:
    """Validates one JSON document; every error carries the line of the offending key."""

    def __init__(self, text: str, source: Optional[Path], config: Config):
        self.text = text
        self.source = source
        self.base_dir = source.parent if source else Path.cwd()
        self.config = config

    def fail(self, message: str, *path: str) -> None:
        raise ConfigurationError(message, line=_key_line(self.text, path) if path else None)

    def resolve(self, raw: str, *path: str) -> Path:
        p = Path(raw)
        if not p.is_absolute():
            p = self.base_dir / p
        if not p.exists():
            self.fail(f"Referenced file {raw!r} does not exist", *path)
        return p

    def number(self, value: Any, *path: str, integer: bool = False, minimum: Optional[float] = None):
        ok = isinstance(value, int) if integer else isinstance(value, (int, float))
        if isinstance(value, bool) or not ok:
            self.fail(f"'{path[-1]}' must be {'an integer' if integer else 'a number'}, got {value!r}", *path)
        if not np.isfinite(value):
            self.fail(f"'{path[-1]}' must be finite", *path)
        if minimum is not None and value < minimum:
            self.fail(f"'{path[-1]}' must be >= {minimum}, got {value}", *path)
        return value

    def order(self, value: Any, *path: str) -> Order:
        if isinstance(value, list) and len(value) == 2:
            return (self.number(value[0], *path, integer=True, minimum=1),
                    self.number(value[1], *path, integer=True, minimum=1))
        n = self.number(value, *path, integer=True, minimum=1)
        return (n, n)

    def rect(self, value: Any, *path: str) -> Rect:
        if not isinstance(value, list) or len(value) != 4:
            self.fail(f"'{path[-1]}' must be [x0, x1, y0, y1]", *path)
        try:
            return Rect.from_bounds([float(self.number(v, *path)) for v in value])
        except CertifyError as e:
            self.fail(str(e), *path)

    def polygon(self, value: Any) -> Polygon:
        try:
            if isinstance(value, str):
                return load_polygon(self.resolve(value, "polygon"))
            if isinstance(value, dict):
                return polygon_from_dict(value)
        except ConfigurationError:
            raise
        except CertifyError as e:
            self.fail(f"Invalid polygon: {e}", "polygon")
        self.fail("'polygon' must be a file path or an object with 'vertices'", "polygon")

    def entry(self, data: Dict[str, Any]) -> Tuple[CatalogEntry, Optional[Rect], Optional[Rect]]:
        problem = data.get("problem")
        if not isinstance(problem, str):
            self.fail("'problem' is required", *(("problem",) if "problem" in data else ()))
        embedding = data.get("embedding") or {}
        if not isinstance(embedding, dict):
            self.fail("'embedding' must be an object", "embedding")
        inner = self.rect(embedding["inner"], "embedding", "inner") if "inner" in embedding else None
        outer = self.rect(embedding["outer"], "embedding", "outer") if "outer" in embedding else None

        if problem == "custom":
            if "polygon" not in data:
                self.fail("Problem 'custom' needs a 'polygon'", "problem")
            if inner is None or outer is None:
                self.fail("Problem 'custom' needs 'embedding' with 'inner' and 'outer'", "problem")
            coeffs = data.get("coefficients")
            if not isinstance(coeffs, dict) or "A" not in coeffs:
                self.fail("Problem 'custom' needs 'coefficients' with at least 'A'", "problem")
            try:
                entry = custom_entry(self.polygon(data["polygon"]), inner, outer, coeffs["A"],
                                     b=coeffs.get("b"), c=float(coeffs.get("c", 0.0)),
                                     f=float(coeffs.get("f", 1.0)))
            except (CertifyError, TypeError, ValueError) as e:
                if isinstance(e, ConfigurationError):
                    raise
                self.fail(f"Invalid coefficients: {e}", "coefficients")
            return entry, None, None
        if problem not in CATALOG:
            self.fail(f"Unknown problem {problem!r}. Catalog: {', '.join(sorted(CATALOG))}, custom", "problem")
        if "polygon" in data:
            if problem != "transport":
                self.fail(f"Problem {problem!r} has a fixed domain; 'polygon' applies to custom and transport",
                          "polygon")
            base = CATALOG["transport"]
            return transport_entry(self.polygon(data["polygon"]), inner or base.inner, outer or base.outer), None, None
        return get_entry(problem), inner, outer

    def field_spec(self, raw: Any) -> FieldSpec:
        if raw is None:
            return FieldSpec()
        if isinstance(raw, str):
            raw = {"kind": raw}
        if not isinstance(raw, dict):
            self.fail("'field' must be an object or a kind name", "field")
        unknown = set(raw) - {"kind", "path", "amplitude", "epsilon", "sigma"}
        if unknown:
            self.fail(f"Unknown field keys: {sorted(unknown)}", "field", sorted(unknown)[0])
        path = raw.get("path")
        if path is not None:
            path = str(self.resolve(str(path), "field", "path"))
        try:
            return FieldSpec(
                kind=raw.get("kind", "truth-minus-bump"),
                path=path,
                amplitude=float(self.number(raw.get("amplitude", 1.0), "field", "amplitude")),
                epsilon=float(self.number(raw.get("epsilon", 0.1), "field", "epsilon")),
                sigma=raw.get("sigma", "t"),
            )
        except ConfigurationError as e:
            if e.line is not None:
                raise
            self.fail(str(e), "field")

    def parameters(self, raw: Any, entry: CatalogEntry) -> List[Tuple[float, ...]]:
        dim = entry.parameters.dim
        if raw is None or raw == "default":
            return entry.default_parameters()
        if isinstance(raw, list):
            raw = {"values": raw}
        if not isinstance(raw, dict) or len(raw) != 1:
            self.fail("'parameters' must hold exactly one of 'values', 'grid', 'linspace'", "parameters")
        kind, spec = next(iter(raw.items()))
        if kind == "values":
            if not isinstance(spec, list) or not spec:
                self.fail("'values' must be a non-empty list", "parameters", "values")
            rows = [tuple(float(self.number(v, "parameters", "values"))
                          for v in (row if isinstance(row, list) else [row]))
                    for row in spec]
        elif kind in ("grid", "linspace"):
            axes_raw = spec if kind == "grid" else [spec]
            if isinstance(axes_raw, dict):
                missing = [n for n in entry.parameters.names if n not in axes_raw]
                if missing:
                    self.fail(f"'grid' is missing parameters {missing}", "parameters", "grid")
                axes_raw = [axes_raw[n] for n in entry.parameters.names]
            axes = []
            for axis in axes_raw:
                if not isinstance(axis, list) or len(axis) != 3:
                    self.fail(f"'{kind}' axes must be [low, high, count]", "parameters", kind)
                lo, hi = (float(self.number(v, "parameters", kind)) for v in axis[:2])
                n = self.number(axis[2], "parameters", kind, integer=True, minimum=1)
                axes.append(np.linspace(lo, hi, n))
            mesh = np.meshgrid(*axes, indexing="ij")
            rows = [tuple(float(v) for v in r) for r in np.column_stack([m.ravel() for m in mesh])]
        else:
            self.fail(f"Unknown parameter spec {kind!r}; expected 'values', 'grid' or 'linspace'", "parameters", kind)
        for row in rows:
            if len(row) != dim:
                self.fail(f"Problem {entry.name!r} has {dim} parameters {entry.parameters.names}, "
                          f"got a row with {len(row)}", "parameters")
        return rows

    def parse(self) -> RunConfig:
        try:
            data = json.loads(self.text)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Invalid JSON: {e.msg}", line=e.lineno)
        if not isinstance(data, dict):
            raise ConfigurationError("Run configuration must be a JSON object", line=1)
        unknown = set(data) - KNOWN_KEYS
        if unknown:
            key = sorted(unknown)[0]
            self.fail(f"Unknown key {key!r}", key)
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            self.fail(f"'schema_version' must be {SCHEMA_VERSION}, got {version!r}",
                      *(("schema_version",) if "schema_version" in data else ()))

        entry, inner, outer = self.entry(data)
        field_spec = self.field_spec(data.get("field"))
        parameters = self.parameters(data.get("parameters"), entry)

        orders = data.get("orders") or {}
        inner_order = self.order(orders["inner"], "orders", "inner") if "inner" in orders else self.config.inner_order
        outer_order = self.order(orders["outer"], "orders", "outer") if "outer" in orders else self.config.outer_order

        quad_raw = data.get("quadrature") or {}
        unknown = set(quad_raw) - QUADRATURE_KEYS
        if unknown:
            self.fail(f"Unknown quadrature keys: {sorted(unknown)}", "quadrature")
        quad = QuadratureSettings.from_config(self.config)
        quad = replace(quad, **{
            k: self.number(v, "quadrature", k, integer=True, minimum=0 if k == "refine_levels" else 1)
            for k, v in quad_raw.items()
        })

        constants = None
        raw_constants = data.get("parabolic_constants")
        if raw_constants is not None:
            if not isinstance(raw_constants, dict):
                self.fail("'parabolic_constants' must be {lower, upper}", "parabolic_constants")
            try:
                constants = parabolic_constants(raw_constants.get("lower"), raw_constants.get("upper"))
            except CertifyError as e:
                self.fail(str(e), "parabolic_constants")
        if entry.space_time and constants is None:
            self.fail(f"Space-time problem {entry.name!r} needs 'parabolic_constants' {{lower, upper}}", "problem")

        oracle_raw = data.get("oracle") or {}
        if isinstance(oracle_raw, bool):
            oracle_raw = {"enabled": oracle_raw}

        output = data.get("output")
        if output is not None:
            output = Path(output)
            if not output.is_absolute():
                output = self.base_dir / output

        workers = data.get("workers")
        if workers is not None:
            workers = self.number(workers, "workers", integer=True, minimum=1)

        return RunConfig(
            problem=entry.name,
            entry=entry,
            field=field_spec,
            parameters=parameters,
            inner_order=inner_order,
            outer_order=outer_order,
            quadrature=quad,
            constants=constants,
            oracle=bool(oracle_raw.get("enabled", False)),
            oracle_levels=self.number(oracle_raw.get("refine_levels", self.config.oracle_levels),
                                      "oracle", "refine_levels", integer=True, minimum=1),
            domain_reference=bool(oracle_raw.get("domain_reference", False)),
            report_tolerance=float(self.number(data.get("report_tolerance", self.config.report_tolerance),
                                               "report_tolerance", minimum=0.0)),
            inner=inner,
            outer=outer,
            output=output,
            workers=workers,
            seed=self.number(data.get("seed", 0), "seed", integer=True),
            source=self.source,
            raw=data,
        )


def parse_run_config(text: str, source: Optional[Path] = None, config: Optional[Config] = None) -> RunConfig:
    """
    Parse and validate a run configuration.

    Args:
        text: JSON document
        source: File the document came from; relative paths resolve against its folder
        config: Environment defaults for unspecified settings

    Returns:
        Validated RunConfig

    Raises:
        ConfigurationError: with the line of the offending key
    """
    return _Parser(text, source, config or get_config()).parse()


def load_run_config(path: Path, config: Optional[Config] = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file {path} does not exist")
    return parse_run_config(path.read_text(encoding="utf-8"), source=path, config=config)


@dataclass
class RunOutcome:
    """A finished run: the sweep result plus where it was stored."""

    run_id: str
    result: SweepResult
    csv_path: Optional[Path]

    @property
    def reports(self) -> List[BoundReport]:
        return self.result.reports

    @property
    def all_failed(self) -> bool:
        return self.result.summary["succeeded"] == 0


class CertifyAPI:
    """
    High-level API for certification runs.

    This class provides a clean interface suitable for both the CLI and tests.
    """

    def __init__(self, config: Optional[Config] = None):
        self.config = config or get_config()
        self.runs = RunStorage(self.config.runs_dir)

    # =========================================================================
    # Catalog
    # =========================================================================

    def list_problems(self) -> List[Dict[str, str]]:
        return [{"name": e.name, "summary": e.summary, "kind": "parabolic" if e.space_time else "elliptic"}
                for e in CATALOG.values()]

    def describe(self, name: str) -> Dict[str, Any]:
        """
        Problem sheet: domain, coefficients, constants (formula and value at a sample mu), embedding.

        Raises:
            ConfigurationError: for an unknown id (message lists the catalog)
        """
        entry = get_entry(name)
        mu = np.array(entry.sample_mu, dtype=float)
        problem = entry.problem_for(mu)
        spatial = problem.spatial if isinstance(problem, SpaceTimeProblem) else problem
        s_pf = poincare_bound(entry.outer)
        values: Dict[str, Optional[float]] = {"c_B": None, "C_B": None}
        if not entry.space_time and spatial.bounds is not None:
            b = spatial.bounds(mu)
            constants = elliptic_constants(b.a0, b.norm_A, b.norm_b, b.norm_c, s_pf)
            values = {"c_B": constants.c_B, "C_B": constants.C_B}
        return {
            "name": entry.name,
            "summary": entry.summary,
            "kind": "parabolic" if entry.space_time else "elliptic",
            "domain": entry.domain_text,
            "area": spatial.domain.area,
            "vertices": len(spatial.domain.vertices),
            "subregions": list(spatial.domain.region_names),
            "parameters": [
                {"name": n, "low": lo, "high": hi}
                for n, lo, hi in zip(entry.parameters.names, entry.parameters.lower, entry.parameters.upper)
            ],
            "coefficients": dict(entry.coefficients_text),
            "constants": {k: {"formula": entry.constants_text[k], "value": values[k]} for k in ("c_B", "C_B")},
            "sample_mu": list(entry.sample_mu),
            "inner": entry.inner.to_list(),
            "outer": entry.outer.to_list(),
            "poincare": s_pf,
            "exact_solution": entry.exact is not None,
        }

    # =========================================================================
    # Runs
    # =========================================================================

    def instantiate(self, run: RunConfig) -> Callable[[np.ndarray], Instance]:
        """Per-parameter factory of problem, embedding and field."""
        entry = run.entry

        def build(mu: np.ndarray) -> Instance:
            problem = entry.problem_for(mu)
            embedding = entry.embedding_for(problem, run.inner, run.outer)
            verify_embedding(embedding, seed=run.seed)
            field, exact = build_field(run.field, entry, problem, embedding, mu, run.oracle_levels)
            return Instance(problem, embedding, field, constants=run.constants, exact_solution=exact)

        return build

    def run(self, run: RunConfig, out: Optional[Path] = None, workers: Optional[int] = None,
            serial: bool = False, on_row: Optional[Callable[[BoundReport], None]] = None) -> RunOutcome:
        """
        Certify every parameter of a run and write the CSV.

        Args:
            run: Validated configuration
            out: CSV path (overrides the config's 'output')
            workers: Pool size (overrides the config and the environment)
            serial: Run rows in this thread, one after another
            on_row: Called as each row finishes

        Returns:
            RunOutcome with the reports, summary and CSV path
        """
        run_id = datetime.now().strftime("%Y%m%d-%H%M%S-") + uuid.uuid4().hex[:6]
        pool = workers or run.workers or self.config.workers
        csv_path = out or run.output or (self.config.runs_dir / f"{run_id}.csv")
        logger.info(f"Run {run_id}: {run.problem}, {len(run.parameters)} parameters, field {run.field.kind}")

        result = sweep(self.instantiate(run), run.parameters, run.settings(),
                       workers=pool, serial=serial, on_row=on_row)
        ReportStorage.write_csv(csv_path, result.reports, run.mu_names)
        self.runs.save_run(run_id, run.problem, run.raw, result.summary, csv_path,
                           environment=self.config.summary())
        logger.info(f"Wrote {len(result.reports)} rows to {csv_path}")
        if result.summary["failed"]:
            logger.warning(f"{result.summary['failed']} of {result.summary['rows']} rows failed")
        return RunOutcome(run_id, result, Path(csv_path))

    def list_runs(self) -> List[Dict[str, Any]]:
        return self.runs.list_runs()
