"""Run configuration: parsing, validation, canonical hashing, and wiring.

A run is described by one JSON file with sections ``model``, ``probe``,
``engine``, ``init``, ``observables``, ``output``. This module turns that
file into the library objects a run needs (basis, Hamiltonian, channels,
initial state, observable columns) and produces the canonical form whose
SHA-256 goes into every artifact manifest. Canonicalization materializes
all defaults and normalizes numbers, so two files describing the same run
hash identically; the ``output`` section is excluded from the hash because
it does not affect the physics.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .fock import FockBasis, SparseOperator, number_op
from .model import BOUNDARIES, LatticeSpec, ground_state, hamiltonian
from .observables import (
    ModePartition,
    doublon_number_op,
    entropy_observable,
    group_number_values,
    imbalance_op,
    subsystem_entropy_from_density,
    variance_of,
)
from .probe import (
    ProbeGeometry,
    build_B,
    build_channels,
    build_D,
    build_fermion_channels,
    load_diagonal_profile,
    load_intersite_profile,
    measurement_strength,
    rayleigh_coefficient,
    uniform_intersite_matrix,
)
from .trajectory import EngineConfig

SCHEMA_VERSION = 1
DENSITY_MATRIX_CAP = 512

_SECTIONS = ("schema_version", "model", "probe", "engine", "init",
             "observables", "output")
_CHANNEL_NAMES = ("d", "b", "dx", "dy")

_ENGINE_FLOATS = ("t_final", "sample_interval", "dt_initial", "dt_max",
                  "rtol", "atol", "jump_tol")


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return section[key]


def _reject_unknown(section: dict, allowed, where: str):
    extra = sorted(set(section) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown keys {extra}; allowed keys are {sorted(allowed)}")


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ConfigError(f"{where}: {value!r} is not finite")
    return out


def _as_complex(value, where: str) -> complex:
    """Accept a real number or a two-element [re, im] list."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2:
        return complex(_as_float(value[0], where), _as_float(value[1], where))
    raise ConfigError(f"{where}: expected a number or [re, im] pair, got {value!r}")


@dataclass(frozen=True)
class RunConfig:
    """Validated run description plus its canonical (hashable) form."""

    model: LatticeSpec
    dimension_cap: int
    geometry: ProbeGeometry
    channels: tuple[str, ...]
    gamma: float | None
    c_coeff: complex | None
    kappa: float | None
    engine: EngineConfig
    init_kind: str
    init_data: tuple | str | None
    observables: tuple[str, ...]
    out_dir: str
    write_density: bool
    canonical: dict

    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.canonical).encode()).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


# -- section parsers -------------------------------------------------------------


def _parse_model(section: dict):
    _reject_unknown(section, {"species", "L", "N", "N_up", "N_down", "J", "U",
                              "boundary", "dimension_cap"}, "model")
    species = _require(section, "species", "model")
    if species not in ("boson", "fermion"):
        raise ConfigError(f"model.species must be 'boson' or 'fermion', got {species!r}")
    L = _as_int(_require(section, "L", "model"), "model.L")
    if species == "boson":
        if "N_up" in section or "N_down" in section:
            raise ConfigError("model: N_up/N_down are fermionic; bosons take N")
        filling = _as_int(_require(section, "N", "model"), "model.N")
    else:
        if "N" in section:
            raise ConfigError("model: fermions take N_up and N_down, not N")
        filling = (
            _as_int(_require(section, "N_up", "model"), "model.N_up"),
            _as_int(_require(section, "N_down", "model"), "model.N_down"),
        )
    J = _as_float(section.get("J", 1.0), "model.J")
    U = _as_float(section.get("U", 0.0), "model.U")
    boundary = section.get("boundary", "open")
    if boundary not in BOUNDARIES:
        raise ConfigError(f"model.boundary must be one of {BOUNDARIES}, got {boundary!r}")
    cap = _as_int(section.get("dimension_cap", 200_000), "model.dimension_cap")
    spec = LatticeSpec(species, L, filling, J=J, U=U, boundary=boundary)
    canon = {"species": species, "L": L, "J": J, "U": U, "boundary": boundary,
             "dimension_cap": cap}
    if species == "boson":
        canon["N"] = filling
    else:
        canon["N_up"], canon["N_down"] = filling
    return spec, cap, canon


def _parse_probe(section: dict, L: int):
    allowed = {"kind", "R", "coefficients", "file", "pattern", "channels",
               "gamma", "kappa", "omega10", "a0", "delta_p"}
    _reject_unknown(section, allowed, "probe")
    kind = _require(section, "kind", "probe")
    canon: dict = {"kind": kind}

    if kind == "odd_sites":
        geometry = ProbeGeometry.odd_sites()
    elif kind == "alternating":
        geometry = ProbeGeometry.alternating()
    elif kind == "rmode":
        R = _as_int(_require(section, "R", "probe"), "probe.R")
        geometry = ProbeGeometry.rmode(R)
        canon["R"] = R
    elif kind in ("custom_diagonal", "fermion_dual"):
        if "file" in section:
            coeffs = load_diagonal_profile(section["file"])
        else:
            raw = _require(section, "coefficients", "probe")
            if not isinstance(raw, list):
                raise ConfigError("probe.coefficients must be a list")
            coeffs = np.array([_as_complex(v, "probe.coefficients") for v in raw])
        if len(coeffs) != L:
            raise ConfigError(
                f"probe: {len(coeffs)} coefficients for a chain of {L} sites"
            )
        factory = (ProbeGeometry.custom_diagonal if kind == "custom_diagonal"
                   else ProbeGeometry.fermion_dual)
        geometry = factory(coeffs)
        canon["coefficients"] = [[float(c.real), float(c.imag)] for c in coeffs]
    elif kind == "intersite":
        if "file" in section:
            matrix = load_intersite_profile(section["file"], L)
        else:
            pattern = section.get("pattern", "uniform")
            if pattern != "uniform":
                raise ConfigError(f"probe.pattern must be 'uniform', got {pattern!r}")
            matrix = None  # resolved against the model boundary at build time
        geometry = matrix  # placeholder, finished in _finish_intersite
        canon["pattern"] = "uniform" if matrix is None else [
            [[float(v.real), float(v.imag)] for v in row] for row in matrix
        ]
    else:
        raise ConfigError(
            f"probe.kind {kind!r} not recognized; use odd_sites, alternating, "
            "rmode, custom_diagonal, fermion_dual, or intersite"
        )

    channels = section.get("channels", ["d"])
    if (not isinstance(channels, list) or not channels
            or any(c not in _CHANNEL_NAMES for c in channels)):
        raise ConfigError(f"probe.channels must be a non-empty list from {_CHANNEL_NAMES}")
    canon["channels"] = list(channels)

    has_gamma = "gamma" in section
    cavity_keys = {"kappa", "omega10", "a0", "delta_p"}
    has_cavity = bool(cavity_keys & set(section))
    if has_gamma == has_cavity:
        raise ConfigError("probe: give either gamma or the cavity quadruple "
                          "(omega10, a0, delta_p, kappa), not both or neither")
    if has_gamma:
        gamma = _as_float(section["gamma"], "probe.gamma")
        c_coeff = kappa = None
        canon["gamma"] = gamma
    else:
        missing = sorted(cavity_keys - set(section))
        if missing:
            raise ConfigError(f"probe: cavity parameters incomplete, missing {missing}")
        omega10 = _as_complex(section["omega10"], "probe.omega10")
        a0 = _as_complex(section["a0"], "probe.a0")
        delta_p = _as_float(section["delta_p"], "probe.delta_p")
        kappa = _as_float(section["kappa"], "probe.kappa")
        c_coeff = rayleigh_coefficient(omega10, a0, delta_p, kappa)
        gamma = measurement_strength(c_coeff, kappa)
        canon["omega10"] = [omega10.real, omega10.imag]
        canon["a0"] = [a0.real, a0.imag]
        canon["delta_p"] = delta_p
        canon["kappa"] = kappa
    return geometry, tuple(channels), gamma, c_coeff, kappa, canon


def _parse_engine(section: dict):
    allowed = {"seed", "n_traj", *_ENGINE_FLOATS, "max_bisect",
               "postselect_no_jump", "workers"}
    _reject_unknown(section, allowed, "engine")
    if "seed" not in section:
        raise ConfigError("engine: seed is required; runs are never wall-clock seeded")
    kwargs = {"seed": _as_int(section["seed"], "engine.seed")}
    if "n_traj" in section:
        kwargs["n_traj"] = _as_int(section["n_traj"], "engine.n_traj")
    for key in _ENGINE_FLOATS:
        if key in section:
            kwargs[key] = _as_float(section[key], f"engine.{key}")
    if "max_bisect" in section:
        kwargs["max_bisect"] = _as_int(section["max_bisect"], "engine.max_bisect")
    if "postselect_no_jump" in section:
        if not isinstance(section["postselect_no_jump"], bool):
            raise ConfigError("engine.postselect_no_jump must be a boolean")
        kwargs["postselect_no_jump"] = section["postselect_no_jump"]
    if "workers" in section:
        kwargs["workers"] = _as_int(section["workers"], "engine.workers")
    engine = EngineConfig(**kwargs)
    canon = {
        "seed": engine.seed, "n_traj": engine.n_traj, "t_final": engine.t_final,
        "sample_interval": engine.sample_interval, "dt_initial": engine.dt_initial,
        "dt_max": engine.dt_max, "rtol": engine.rtol, "atol": engine.atol,
        "jump_tol": engine.jump_tol, "max_bisect": engine.max_bisect,
        "postselect_no_jump": engine.postselect_no_jump,
    }
    return engine, canon


def _parse_init(section: dict, model: LatticeSpec):
    _reject_unknown(section, {"state", "occupations", "up", "down", "path"}, "init")
    kind = _require(section, "state", "init")
    if kind == "ground_state":
        return kind, None, {"state": kind}
    if kind == "fock":
        if model.species == "boson":
            raw = _require(section, "occupations", "init")
            occ = tuple(_as_int(v, "init.occupations") for v in raw)
            if len(occ) != model.L:
                raise ConfigError(
                    f"init: {len(occ)} occupations for a chain of {model.L} sites"
                )
            if sum(occ) != model.filling:
                raise ConfigError(
                    f"init: occupations sum to {sum(occ)}, model has N={model.filling}"
                )
            return kind, occ, {"state": kind, "occupations": list(occ)}
        up = tuple(_as_int(v, "init.up") for v in _require(section, "up", "init"))
        down = tuple(_as_int(v, "init.down") for v in _require(section, "down", "init"))
        if len(up) != model.L or len(down) != model.L:
            raise ConfigError(f"init: up/down patterns must each have {model.L} entries")
        if any(v not in (0, 1) for v in up + down):
            raise ConfigError("init: fermionic occupations must be 0 or 1")
        n_up, n_down = model.filling
        if sum(up) != n_up or sum(down) != n_down:
            raise ConfigError(
                f"init: pattern fills ({sum(up)}, {sum(down)}), model has "
                f"({n_up}, {n_down})"
            )
        return kind, up + down, {"state": kind, "up": list(up), "down": list(down)}
    if kind == "file":
        path = _require(section, "path", "init")
        return kind, str(path), {"state": kind, "path": str(path)}
    raise ConfigError(f"init.state must be ground_state, fock, or file, got {kind!r}")


def _parse_observables(entries) -> tuple[str, ...]:
    if entries is None:
        entries = ["density"]
    if not isinstance(entries, list) or not all(isinstance(e, str) for e in entries):
        raise ConfigError("observables must be a list of strings")
    seen = set()
    for e in entries:
        if e in seen:
            raise ConfigError(f"observables: {e!r} requested twice")
        seen.add(e)
    return tuple(entries)


def _parse_output(section: dict):
    _reject_unknown(section, {"directory", "density_matrix"}, "output")
    out_dir = _require(section, "directory", "output")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output.directory must be a non-empty string")
    write_density = section.get("density_matrix", False)
    if not isinstance(write_density, bool):
        raise ConfigError("output.density_matrix must be a boolean")
    return out_dir, write_density


def parse_config(data: dict) -> RunConfig:
    """Validate a parsed JSON document and wire it into a RunConfig."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(data, _SECTIONS, "config")
    # the canonical config written into artifacts carries this stamp, so a
    # stored run must be accepted back verbatim (plus an output section)
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"config: schema_version {version!r} not supported, expected {SCHEMA_VERSION}"
        )
    for name in ("model", "probe", "engine", "init", "output"):
        if name not in data:
            raise ConfigError(f"config: missing section {name!r}")
        if not isinstance(data[name], dict):
            raise ConfigError(f"config: section {name!r} must be an object")

    model, cap, model_canon = _parse_model(data["model"])
    geometry, channels, gamma, c_coeff, kappa, probe_canon = _parse_probe(
        data["probe"], model.L
    )
    if geometry is None:
        geometry = ProbeGeometry.intersite(uniform_intersite_matrix(model.L, model.boundary))
    elif not isinstance(geometry, ProbeGeometry):
        geometry = ProbeGeometry.intersite(geometry)
    engine, engine_canon = _parse_engine(data["engine"])
    init_kind, init_data, init_canon = _parse_init(data["init"], model)
    observables = _parse_observables(data.get("observables"))
    out_dir, write_density = _parse_output(data["output"])

    if model.species == "boson" and any(c in ("dx", "dy") for c in channels):
        raise ConfigError("probe: dx/dy channels are fermionic")
    if model.species == "fermion" and geometry.kind != "fermion_dual" \
            and any(c in ("dx", "dy") for c in channels):
        raise ConfigError("probe: dx/dy channels need the fermion_dual geometry")

    canonical = {
        "schema_version": SCHEMA_VERSION,
        "model": model_canon,
        "probe": probe_canon,
        "engine": engine_canon,
        "init": init_canon,
        "observables": list(observables),
    }
    return RunConfig(
        model=model, dimension_cap=cap, geometry=geometry, channels=channels,
        gamma=gamma, c_coeff=c_coeff, kappa=kappa, engine=engine,
        init_kind=init_kind, init_data=init_data, observables=observables,
        out_dir=out_dir, write_density=write_density, canonical=canonical,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_config(data)


# -- wiring ----------------------------------------------------------------------


def build_operators(cfg: RunConfig):
    """Basis, Hamiltonian, and jump channels for a validated config."""
    basis = cfg.model.build_basis(cap=cfg.dimension_cap)
    h0 = hamiltonian(basis, cfg.model)
    chans = build_channels(
        basis, cfg.geometry, cfg.channels, gamma=cfg.gamma,
        c_coeff=cfg.c_coeff, kappa=cfg.kappa, boundary=cfg.model.boundary,
    )
    return basis, h0, chans


def initial_state(cfg: RunConfig, basis: FockBasis, h0: SparseOperator) -> np.ndarray:
    if cfg.init_kind == "ground_state":
        _, psi = ground_state(h0)
        return psi
    if cfg.init_kind == "fock":
        occ = tuple(cfg.init_data)
        if occ not in basis.index:
            raise ConfigError(f"init: occupation {occ} is not in the basis sector")
        psi = np.zeros(basis.dim, dtype=complex)
        psi[basis.index[occ]] = 1.0
        return psi
    try:
        psi = np.asarray(np.load(cfg.init_data), dtype=complex)
    except OSError as exc:
        raise ConfigError(f"init: cannot read state file {cfg.init_data}: {exc}") from exc
    if psi.shape != (basis.dim,):
        raise ConfigError(
            f"init: state file has shape {psi.shape}, basis dimension is {basis.dim}"
        )
    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        raise ConfigError("init: state file holds a zero vector")
    return psi / norm


# -- observable columns ------------------------------------------------------------


@dataclass(frozen=True)
class Column:
    """One CSV column: a name, a pure-state evaluator, and a density-matrix
    evaluator (for the master-equation run)."""

    name: str
    from_state: object
    from_density: object


def _expectation_column(name: str, op: SparseOperator) -> Column:
    mat = op.matrix.tocsr()

    def from_state(phi):
        return float(np.vdot(phi, mat @ phi).real)

    def from_density(rho):
        return float((mat @ rho).diagonal().sum().real)

    return Column(name, from_state, from_density)


def _variance_column(name: str, op: SparseOperator) -> Column:
    state_fn = variance_of(op)
    mat = op.matrix.tocsr()
    sq = (mat @ mat).tocsr()

    def from_density(rho):
        ex = (mat @ rho).diagonal().sum().real
        ex2 = (sq @ rho).diagonal().sum().real
        return float(ex2 - ex * ex)

    return Column(name, state_fn, from_density)


def _covariance_column(va: np.ndarray, vb: np.ndarray, name: str) -> Column:
    def from_state(phi):
        p = np.abs(phi) ** 2
        return float((p * va * vb).sum() - (p * va).sum() * (p * vb).sum())

    def from_density(rho):
        p = rho.diagonal().real
        return float((p * va * vb).sum() - (p * va).sum() * (p * vb).sum())

    return Column(name, from_state, from_density)


def _distribution_columns(basis: FockBasis, partition: ModePartition, group: int,
                          prefix: str) -> list[Column]:
    values = group_number_values(basis, partition, group)
    n_max = basis.n_total
    cols = []
    for k in range(n_max + 1):
        mask = (values == k).astype(float)

        def from_state(phi, m=mask):
            return float((np.abs(phi) ** 2 * m).sum())

        def from_density(rho, m=mask):
            return float((rho.diagonal().real * m).sum())

        cols.append(Column(f"{prefix}{k}", from_state, from_density))
    return cols


def _entropy_column(basis: FockBasis, k: int) -> Column:
    sites = tuple(range(1, k + 1))
    state_fn = entropy_observable(basis, sites)

    def from_density(rho):
        return subsystem_entropy_from_density(rho, basis, sites)

    return Column(f"entropy_{k}", state_fn, from_density)


def _int_field(text: str, where: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"{where}: {text!r} is not an integer") from exc


def _parse_partition(token: str, L: int, where: str):
    """Returns the partition plus one short name per group for column labels."""
    if token == "odd_even":
        return ModePartition.odd_even(L), ("odd", "even")
    if token.startswith("rmode:"):
        R = _int_field(token.split(":", 1)[1], where)
        return ModePartition.rmode(L, R), tuple(f"m{g}" for g in range(R))
    raise ConfigError(f"{where}: unknown partition {token!r}; use odd_even or rmode:<R>")


def compile_columns(cfg: RunConfig, basis: FockBasis) -> list[Column]:
    """Expand the observables section into ordered, named CSV columns."""
    cols: list[Column] = []
    for entry in cfg.observables:
        parts = entry.split(":")
        head = parts[0]
        if head == "density" and len(parts) == 1:
            for j in range(1, basis.L + 1):
                cols.append(_expectation_column(f"n_{j}", number_op(basis, j)))
        elif head == "imbalance" and len(parts) == 1:
            cols.append(_expectation_column("imbalance", imbalance_op(basis)))
        elif head == "doublons" and len(parts) == 1:
            cols.append(_expectation_column("doublons", doublon_number_op(basis)))
        elif head == "numbers" and len(parts) == 2:
            partition, names = _parse_partition(parts[1], basis.L, f"observables {entry!r}")
            for g in range(partition.n_groups):
                diag = group_number_values(basis, partition, g).astype(float)
                op = SparseOperator(basis, sp.diags(diag, format="csr"))
                cols.append(_expectation_column(f"N_{names[g]}", op))
        elif head == "distribution" and len(parts) == 3:
            partition, names = _parse_partition(parts[1], basis.L, f"observables {entry!r}")
            group = _int_field(parts[2], f"observables {entry!r}")
            if not 0 <= group < partition.n_groups:
                raise ConfigError(
                    f"observables {entry!r}: group must be in 0..{partition.n_groups - 1}"
                )
            cols.extend(_distribution_columns(basis, partition, group, f"P_{names[group]}_"))
        elif head == "variance" and len(parts) == 2 and parts[1] in ("d", "b"):
            if parts[1] == "d":
                if cfg.geometry.kind == "fermion_dual":
                    dx, _ = build_fermion_channels(basis, cfg.geometry)
                    op = dx
                else:
                    op = build_D(basis, cfg.geometry)
            else:
                op = build_B(basis, cfg.geometry, cfg.model.boundary)
            cols.append(_variance_column(f"var_{parts[1]}", op))
        elif head == "correlation" and len(parts) == 3:
            where = f"observables {entry!r}"
            i, j = _int_field(parts[1], where), _int_field(parts[2], where)
            if not (1 <= i <= basis.L and 1 <= j <= basis.L) or i == j:
                raise ConfigError(f"{where}: need two distinct sites in 1..{basis.L}")
            va = _site_density_diag(basis, i)
            vb = _site_density_diag(basis, j)
            cols.append(_covariance_column(va, vb, f"corr_{i}_{j}"))
        elif head == "entropy" and len(parts) == 2:
            k = _int_field(parts[1], f"observables {entry!r}")
            if not 1 <= k < basis.L:
                raise ConfigError(
                    f"observables {entry!r}: prefix length must be in 1..{basis.L - 1}"
                )
            cols.append(_entropy_column(basis, k))
        else:
            raise ConfigError(
                f"observables: {entry!r} not recognized; known forms are density, "
                "imbalance, doublons, numbers:<partition>, "
                "distribution:<partition>:<group>, variance:d, variance:b, "
                "correlation:<i>:<j>, entropy:<k>"
            )
    names = [c.name for c in cols]
    if len(names) != len(set(names)):
        raise ConfigError(f"observables expand to duplicate columns: {names}")
    return cols


def _site_density_diag(basis: FockBasis, j: int) -> np.ndarray:
    occ = basis.occupations()
    if basis.species == "fermion":
        return (occ[:, j - 1] + occ[:, basis.L + j - 1]).astype(float)
    return occ[:, j - 1].astype(float)
