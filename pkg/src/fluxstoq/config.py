"""Experiment configuration files.

INI-style text (``configparser``) with sections ``[experiment]``, ``[circuit]``,
``[pimc]``, ``[grid]`` and ``[sweep]``. Matrices are written as indented
continuation lines, one row per line::

    [circuit]
    n_qubits = 2
    inductive_energy_ghz =
        704  0
        0    704

Each qubit has a ``[junctionK]`` record (K = 1..n_qubits). Lists are
whitespace or comma separated. See ``README.md`` for every key.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuit import CircuitError, CircuitSpec, Junction, two_qubit_capacitance
from .pimc.stats import MIN_SAMPLES
from .units import EC_GHZ_FF

PIPELINES = ("ed_only", "pimc_flux", "pimc_tim", "project", "stoqcheck", "figure3", "figure4", "convergence_sweep")
THERMAL_PIPELINES = ("ed_only", "pimc_flux", "pimc_tim", "figure3", "figure4", "convergence_sweep")
SECTIONS = {
    "experiment": {
        "pipeline", "temperature_ghz", "low_temperature_ghz", "trotter_sweep", "low_trotter_sweep",
        "tim_trotter_sweep", "n_states", "seed", "n_chains", "paper_ground_energy_ghz", "label",
    },
    "circuit": {
        "n_qubits", "qubit_ec_ghz",
        "coupling_capacitance_ff", "ec_convention", "capacitance_ff", "inductance_nh", "inductive_energy_ghz",
    },
    "pimc": {
        "trotter_m", "total_iterations", "equilibration_iterations", "sample_stride", "local_update_prob",
        "shift_halfwidth", "iteration_scale", "record_samples",
    },
    "grid": {"half_width", "points"},
    "sweep": {"parameter", "values"},
}
JUNCTION_KEYS = {"ej_ghz", "phi_cjj_over_pi", "phi_q_over_pi", "delta_q_over_2pi"}
JUNCTION_RE = re.compile(r"junction[1-9]\d*")
SWEEPABLE = {
    ("circuit", "coupling_capacitance_ff"),
    ("experiment", "temperature_ghz"),
    ("pimc", "trotter_m"),
}
PIMC_DEFAULTS = {
    "total_iterations": 30_000_000,
    "equilibration_iterations": 5_000_000,
    "sample_stride": 1000,
    "local_update_prob": 0.9,
    "shift_halfwidth": 0.75,
    "iteration_scale": 1.0,
    "record_samples": False,
}


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Diagnostic:
    line: int | None
    field: str
    message: str

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return f"{where}{self.field}: {self.message}"


@dataclass(frozen=True)
class ExperimentSpec:
    pipeline: str
    circuit: CircuitSpec
    temperature_ghz: float | None
    resolved: dict = field(repr=False)
    source: str | None = None

    def value(self, section, key, default=None):
        return self.resolved.get(section, {}).get(key, default)


def _line_index(text: str) -> dict:
    """Map (section, key) to the 1-based line where the key is defined."""
    index, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            index[(section, None)] = no
            continue
        m = re.match(r"([A-Za-z_][\w]*)\s*[=:]", line)
        if m and section:
            index[(section, m.group(1).lower())] = no
    return index


def parse_vector(text: str) -> list[float]:
    tokens = [t for t in re.split(r"[\s,;]+", text.strip()) if t]
    return [float(t) for t in tokens]


def parse_matrix(text: str) -> np.ndarray:
    rows = [r for r in re.split(r"[\n;]", text.strip()) if r.strip()]
    data = [parse_vector(r) for r in rows]
    if len({len(r) for r in data}) != 1:
        raise ValueError("matrix rows have different lengths")
    return np.array(data, dtype=float)


class _Reader:
    """Typed access to a parsed file that records diagnostics instead of raising."""

    def __init__(self, parser, lines):
        self.parser = parser
        self.lines = lines
        self.diagnostics: list[Diagnostic] = []
        self.resolved: dict = {}

    def error(self, section, key, message):
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        self.diagnostics.append(Diagnostic(line, f"{section}.{key}" if key else section, message))

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def get(self, section, key, kind, default=None, *, required=False):
        if not self.has(section, key):
            if required:
                self.error(section, key, "required key is missing")
            if default is not None:
                self.resolved.setdefault(section, {})[key] = default
            return default
        raw = self.parser.get(section, key)
        try:
            value = kind(raw)
        except (ValueError, TypeError) as exc:
            self.error(section, key, f"cannot parse {raw.strip()!r} ({exc})")
            return default
        self.resolved.setdefault(section, {})[key] = value.tolist() if isinstance(value, np.ndarray) else value
        return value


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


def _bool(s):
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _int_list(s):
    return [_int(t) for t in re.split(r"[\s,;]+", s.strip()) if t]


def _circuit(reader: _Reader, n: int | None):
    if n is None:
        return None
    if n < 1:
        reader.error("circuit", "n_qubits", "must be a positive integer")
        return None
    junctions = []
    for k in range(1, n + 1):
        section = f"junction{k}"
        if not reader.parser.has_section(section):
            reader.error("circuit", "n_qubits", f"missing junction record [{section}]")
            continue
        ej = reader.get(section, "ej_ghz", float, required=True)
        cjj = reader.get(section, "phi_cjj_over_pi", float, required=True)
        phq = reader.get(section, "phi_q_over_pi", float, 1.0)
        det = reader.get(section, "delta_q_over_2pi", float, 0.0)
        if ej is None or cjj is None or phq is None or det is None:
            continue
        ok = True
        if ej < 0:
            reader.error(section, "ej_ghz", "negative Josephson energy")
            ok = False
        if not -1 <= cjj <= 1:
            reader.error(section, "phi_cjj_over_pi", "must lie in [-1, 1]")
            ok = False
        if ok:
            junctions.append(Junction(ej, cjj * np.pi, phq * np.pi + 2 * np.pi * det))
    extra = [s for s in reader.parser.sections() if JUNCTION_RE.fullmatch(s) and int(s[8:]) > n]
    for section in extra:
        reader.error(section, None, f"junction record beyond n_qubits = {n}")
    if len(junctions) != n:
        junctions = None

    cap = None
    if reader.has("circuit", "capacitance_ff"):
        if reader.has("circuit", "qubit_ec_ghz"):
            reader.error("circuit", "qubit_ec_ghz", "give either capacitance_ff or qubit_ec_ghz, not both")
        cap = reader.get("circuit", "capacitance_ff", parse_matrix)
    elif reader.has("circuit", "qubit_ec_ghz"):
        ec = reader.get("circuit", "qubit_ec_ghz", float)
        cc = reader.get("circuit", "coupling_capacitance_ff", float, 0.0 if n == 1 else None, required=n > 1)
        conv = reader.get("circuit", "ec_convention", str.strip, "loaded")
        if conv not in ("loaded", "bare"):
            reader.error("circuit", "ec_convention", "must be 'loaded' or 'bare'")
        elif ec is not None and ec <= 0:
            reader.error("circuit", "qubit_ec_ghz", "charging energy must be positive")
        elif cc is not None and cc < 0:
            reader.error("circuit", "coupling_capacitance_ff", "negative capacitance")
        elif ec is not None and cc is not None:
            if n == 1:
                cap = np.array([[EC_GHZ_FF / ec]])
            elif n == 2:
                cap = two_qubit_capacitance(ec, cc, conv)
            else:
                reader.error("circuit", "qubit_ec_ghz", "shorthand supports 1 or 2 qubits; give capacitance_ff")
    else:
        reader.error("circuit", "capacitance_ff", "give capacitance_ff or qubit_ec_ghz")
    if cap is not None and cap.size and np.any(np.diag(np.atleast_2d(cap)) <= 0):
        reader.error("circuit", "capacitance_ff", "negative or zero capacitance on the diagonal")

    el = lnh = None
    if reader.has("circuit", "inductive_energy_ghz") == reader.has("circuit", "inductance_nh"):
        reader.error("circuit", "inductive_energy_ghz", "give exactly one of inductive_energy_ghz or inductance_nh")
    elif reader.has("circuit", "inductive_energy_ghz"):
        el = reader.get("circuit", "inductive_energy_ghz", parse_matrix)
        if el is not None and el.size == 1 and n > 1:
            el = float(el.ravel()[0]) * np.eye(n)
    else:
        lnh = reader.get("circuit", "inductance_nh", parse_matrix)
        if lnh is not None and lnh.size == 1 and n > 1:
            lnh = float(lnh.ravel()[0]) * np.eye(n)

    if junctions is None or cap is None or (el is None and lnh is None):
        return None
    try:
        return CircuitSpec(cap, junctions, inductance_nh=lnh, inductive_energy_ghz=el)
    except CircuitError as exc:
        for msg in str(exc).split("; "):
            key = msg.split(":")[0].strip()
            key = key if key in SECTIONS["circuit"] else "junctions" if key.startswith("junction") else key
            reader.error("circuit", key, msg)
        return None


def _read(text: str, source=None, overrides=None):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    lines = _line_index(text)
    try:
        parser.read_string(text, source=str(source or "<config>"))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError([Diagnostic(line, "syntax", str(exc).splitlines()[0])]) from None
    for (section, key), value in (overrides or {}).items():
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, str(value))
    reader = _Reader(parser, lines)
    for section in parser.sections():
        allowed = JUNCTION_KEYS if JUNCTION_RE.fullmatch(section) else SECTIONS.get(section)
        if allowed is None:
            reader.error(section, None, "unknown section")
            continue
        for key in parser.options(section):
            if key not in allowed:
                reader.error(section, key, "unknown key")
    for section in ("experiment", "circuit"):
        if not parser.has_section(section):
            reader.error(section, None, "missing section")
    if reader.diagnostics and any(d.message == "missing section" for d in reader.diagnostics):
        return reader, None

    pipeline = reader.get("experiment", "pipeline", str.strip, required=True)
    if pipeline is not None and pipeline not in PIPELINES:
        reader.error("experiment", "pipeline", f"unknown pipeline {pipeline!r}; expected one of {', '.join(PIPELINES)}")
    temp = reader.get("experiment", "temperature_ghz", float, required=pipeline in THERMAL_PIPELINES)
    if temp is not None and not temp > 0:
        reader.error("experiment", "temperature_ghz", "must be positive")
    if pipeline == "figure4":
        low = reader.get("experiment", "low_temperature_ghz", float, required=True)
        if low is not None and not low > 0:
            reader.error("experiment", "low_temperature_ghz", "must be positive")
        reader.get("experiment", "low_trotter_sweep", _int_list, required=True)
    if pipeline in ("figure3", "figure4", "convergence_sweep"):
        reader.get("experiment", "trotter_sweep", _int_list, required=True)
    if pipeline in ("figure3", "convergence_sweep"):
        reader.get("experiment", "tim_trotter_sweep", _int_list, [])
    for key in ("trotter_sweep", "low_trotter_sweep", "tim_trotter_sweep"):
        values = reader.resolved.get("experiment", {}).get(key) or []
        if any(m < 2 for m in values):
            reader.error("experiment", key, "Trotter numbers must be >= 2")
    n_states = reader.get("experiment", "n_states", _int, 40)
    if n_states is not None and not 1 <= n_states <= 64:
        reader.error("experiment", "n_states", "must be between 1 and 64")
    seed = reader.get("experiment", "seed", _int, 0)
    if seed is not None and not 0 <= seed < 2**64:
        reader.error("experiment", "seed", "must be a non-negative 64-bit integer")
    chains = reader.get("experiment", "n_chains", _int, 1)
    if chains is not None and chains < 1:
        reader.error("experiment", "n_chains", "must be >= 1")
    reader.get("experiment", "paper_ground_energy_ghz", float)
    reader.get("experiment", "label", str.strip)

    m = reader.get("pimc", "trotter_m", _int, required=pipeline in ("pimc_flux", "pimc_tim"))
    if m is not None and m < 2:
        reader.error("pimc", "trotter_m", "must be >= 2")
    kinds = {"total_iterations": _int, "equilibration_iterations": _int, "sample_stride": _int,
             "local_update_prob": float, "shift_halfwidth": float, "iteration_scale": float, "record_samples": _bool}
    for key, default in PIMC_DEFAULTS.items():
        reader.get("pimc", key, kinds[key], default)
    pimc = reader.resolved.get("pimc", {})
    if pimc.get("iteration_scale", 1) <= 0:
        reader.error("pimc", "iteration_scale", "must be positive")
    elif pimc.get("equilibration_iterations", 0) >= pimc.get("total_iterations", 1):
        reader.error("pimc", "equilibration_iterations", "must be smaller than total_iterations")
    if pimc.get("sample_stride", 1) < 1:
        reader.error("pimc", "sample_stride", "must be >= 1")
    elif pipeline not in ("project", "stoqcheck", "ed_only") and pimc.get("iteration_scale", 1) > 0:
        scale = pimc.get("iteration_scale", 1)
        recorded = (round(pimc.get("total_iterations", 0) / scale) - round(pimc.get("equilibration_iterations", 0) / scale))
        if recorded // pimc["sample_stride"] < MIN_SAMPLES:
            reader.error("pimc", "sample_stride",
                         f"only {recorded // pimc['sample_stride']} samples per chain after scaling; need {MIN_SAMPLES}")
    if not 0 <= pimc.get("local_update_prob", 0.5) <= 1:
        reader.error("pimc", "local_update_prob", "must lie in [0, 1]")
    if pimc.get("shift_halfwidth", 1) <= 0:
        reader.error("pimc", "shift_halfwidth", "must be positive")

    hw = reader.get("grid", "half_width", float)
    pts = reader.get("grid", "points", _int)
    if hw is not None and hw <= 0:
        reader.error("grid", "half_width", "must be positive")
    if pts is not None and pts < 16:
        reader.error("grid", "points", "must be >= 16")
    if parser.has_section("sweep"):
        param = reader.get("sweep", "parameter", str.strip, required=True)
        reader.get("sweep", "values", parse_vector, required=True)
        if param is not None and tuple(param.split(".", 1)) not in SWEEPABLE:
            reader.error("sweep", "parameter", f"not sweepable; choose from {sorted('.'.join(p) for p in SWEEPABLE)}")

    n = reader.get("circuit", "n_qubits", _int, required=True)
    circuit = _circuit(reader, n)
    if circuit is not None and pipeline in ("project", "stoqcheck", "figure3", "figure4") and circuit.n_qubits != 2:
        reader.error("circuit", "n_qubits", f"pipeline {pipeline} needs exactly 2 qubits")
    if circuit is not None and circuit.n_qubits > 2 and pipeline in ("ed_only",):
        reader.error("circuit", "n_qubits", "exact diagonalization supports at most 2 qubits")
    return reader, circuit


def validate_text(text: str, source=None, overrides=None) -> list[Diagnostic]:
    try:
        reader, _ = _read(text, source, overrides)
    except ConfigError as exc:
        return exc.diagnostics
    return reader.diagnostics


def validate_config(path) -> list[Diagnostic]:
    """All schema violations of a config file (empty list when valid)."""
    path = Path(path)
    return validate_text(path.read_text(), path)


def load_config(path, overrides=None) -> ExperimentSpec:
    path = Path(path)
    return load_text(path.read_text(), path, overrides)


def load_text(text: str, source=None, overrides=None) -> ExperimentSpec:
    reader, circuit = _read(text, source, overrides)
    if reader.diagnostics:
        raise ConfigError(reader.diagnostics)
    exp = reader.resolved["experiment"]
    return ExperimentSpec(
        pipeline=exp["pipeline"],
        circuit=circuit,
        temperature_ghz=exp.get("temperature_ghz"),
        resolved=reader.resolved,
        source=str(source) if source else None,
    )


def shipped_config(name: str) -> Path:
    """Path of a config file bundled with the package."""
    return Path(__file__).parent / "configs" / name
