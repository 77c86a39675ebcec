"""Run configuration: INI schema, strict parsing, full-precision round-trip.

A config file drives every CLI command. Parsing is strict: unknown
sections or keys are errors, not warnings, because a silently ignored
typo in a security parameter is worse than a crash. Serialization writes
every field with repr() floats so that load(save(cfg)) == cfg exactly.
"""

from __future__ import annotations

import configparser
import csv
import io
import os
from dataclasses import dataclass, replace
from typing import Optional

from .channel import DetectorParams
from .errors import ConfigError
from .optimizer import (
    DEFAULT_DECADES,
    DEFAULT_POINTS_PER_DECADE,
    MAX_DISTANCE_CAP_KM,
    SweepSpec,
)
from .protocols import (
    DEFAULT_EC_INEFFICIENCY,
    DEFAULT_SIFT_FACTOR,
    GLLP,
    PROTOCOLS,
    ProtocolParams,
)
from .source import (
    DEFAULT_FAILURE_EXPONENT,
    EMPIRICAL_HISTOGRAM,
    GAUSSIAN_APPROX,
    POISSON_EXACT,
    SourceSpec,
)

OPTIMIZE = "optimize"
AUTO = "auto"
ASYMPTOTIC = "asymptotic"

# Placeholder intensities used when the optimizer will choose them; both are
# always populated so protocol switches never hit the decoy validation.
_TEMPLATE_LAMBDA_SIGNAL = 0.5
_TEMPLATE_LAMBDA_DECOY = 0.25


@dataclass(frozen=True)
class RunConfig:
    """Flat, validated view of one INI file. All fields have defaults."""

    mean_photons: float = 1.0e6
    distribution: str = POISSON_EXACT
    sequence_length: Optional[int] = None
    failure_exponent: float = DEFAULT_FAILURE_EXPONENT
    histogram_csv: Optional[str] = None
    histogram: Optional[tuple[tuple[int, float], ...]] = None

    delta: float = 0.01
    epsilon: Optional[float] = None  # None means derive from sequence_length

    detector: DetectorParams = DetectorParams()

    protocol_name: str = GLLP
    lambda_signal: Optional[float] = None  # None means optimize
    lambda_decoy: Optional[float] = None
    sift_factor: float = DEFAULT_SIFT_FACTOR
    ec_inefficiency: float = DEFAULT_EC_INEFFICIENCY

    distances_km: tuple[float, ...] = (0.0, 20.0, 40.0)
    lambda_min: Optional[float] = None
    lambda_max: Optional[float] = None
    points_per_decade: int = DEFAULT_POINTS_PER_DECADE
    decades: float = DEFAULT_DECADES
    delta_grid: tuple[float, ...] = (0.01,)
    max_distance_cap_km: float = MAX_DISTANCE_CAP_KM

    output_directory: str = "out"

    def source_spec(self) -> SourceSpec:
        hist = dict(self.histogram) if self.histogram is not None else None
        return SourceSpec(
            mean_photons=self.mean_photons,
            distribution=self.distribution,
            sequence_length=self.sequence_length,
            histogram=hist,
        )

    def protocol_params(self, protocol: Optional[str] = None) -> ProtocolParams:
        """Template params; pinned intensities if the config fixes them."""
        name = protocol if protocol is not None else self.protocol_name
        lam_s = (
            self.lambda_signal
            if self.lambda_signal is not None
            else _TEMPLATE_LAMBDA_SIGNAL
        )
        lam_d = (
            self.lambda_decoy
            if self.lambda_decoy is not None
            else min(_TEMPLATE_LAMBDA_DECOY, 0.5 * lam_s)
        )
        return ProtocolParams(
            protocol=name,
            lambda_signal=lam_s,
            lambda_decoy=lam_d,
            sift_factor=self.sift_factor,
            ec_inefficiency=self.ec_inefficiency,
        )

    @property
    def pinned_lambdas(self) -> bool:
        return self.lambda_signal is not None

    def sweep_spec(
        self,
        distances_km: Optional[tuple[float, ...]] = None,
        protocol: Optional[str] = None,
        delta_grid: Optional[tuple[float, ...]] = None,
    ) -> SweepSpec:
        return SweepSpec(
            distances_km=(
                distances_km if distances_km is not None else self.distances_km
            ),
            protocol=self.protocol_params(protocol),
            delta_grid=delta_grid if delta_grid is not None else self.delta_grid,
            lambda_min=self.lambda_min,
            lambda_max=self.lambda_max,
            points_per_decade=self.points_per_decade,
            decades=self.decades,
            max_distance_cap_km=self.max_distance_cap_km,
        )


_SCHEMA: dict[str, tuple[str, ...]] = {
    "source": (
        "mean_photons",
        "distribution",
        "sequence_length",
        "failure_exponent",
        "histogram_csv",
    ),
    "window": ("delta", "epsilon"),
    "detector": ("eta_bob", "alpha_db_per_km", "y0", "e_det", "e0"),
    "protocol": (
        "name",
        "lambda_signal",
        "lambda_decoy",
        "sift_factor",
        "ec_inefficiency",
    ),
    "sweep": (
        "distances_km",
        "lambda_min",
        "lambda_max",
        "points_per_decade",
        "decades",
        "delta_grid",
        "max_distance_cap_km",
    ),
    "output": ("directory",),
}

_DISTRIBUTION_NAMES = (POISSON_EXACT, GAUSSIAN_APPROX, EMPIRICAL_HISTOGRAM)


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from exc


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not an integer") from exc


def _parse_sentinel_float(
    section: str, key: str, raw: str, sentinel: str
) -> Optional[float]:
    if raw.strip().lower() == sentinel:
        return None
    return _parse_float(section, key, raw)


def _parse_float_list(section: str, key: str, raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"[{section}] {key} must list at least one number")
    return tuple(_parse_float(section, key, p) for p in parts)


def load_histogram_csv(path: str) -> tuple[tuple[int, float], ...]:
    """Two-column CSV: photon_count, probability. Header row required."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != [
                "photon_count",
                "probability",
            ]:
                raise ConfigError(
                    f"{path}: expected header 'photon_count,probability', "
                    f"got {header!r}"
                )
            entries = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 2:
                    raise ConfigError(f"{path}:{lineno}: expected two columns")
                try:
                    entries.append((int(row[0]), float(row[1])))
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read histogram {path}: {exc}") from exc
    if not entries:
        raise ConfigError(f"{path}: histogram is empty")
    return tuple(entries)


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(
                f"unknown section [{section}]; "
                f"expected one of {', '.join(sorted(_SCHEMA))}"
            )
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}]; "
                    f"expected one of {', '.join(_SCHEMA[section])}"
                )

    cfg = RunConfig()

    def get(section: str, key: str) -> Optional[str]:
        if parser.has_section(section) and key in parser[section]:
            return parser[section][key]
        return None

    raw = get("source", "mean_photons")
    if raw is not None:
        cfg = replace(cfg, mean_photons=_parse_float("source", "mean_photons", raw))
    raw = get("source", "distribution")
    if raw is not None:
        name = raw.strip()
        if name not in _DISTRIBUTION_NAMES:
            raise ConfigError(
                f"[source] distribution = {name!r}; "
                f"expected one of {', '.join(_DISTRIBUTION_NAMES)}"
            )
        cfg = replace(cfg, distribution=name)
    raw = get("source", "sequence_length")
    if raw is not None:
        if raw.strip().lower() == ASYMPTOTIC:
            cfg = replace(cfg, sequence_length=None)
        else:
            cfg = replace(
                cfg, sequence_length=_parse_int("source", "sequence_length", raw)
            )
    raw = get("source", "failure_exponent")
    if raw is not None:
        cfg = replace(
            cfg, failure_exponent=_parse_float("source", "failure_exponent", raw)
        )
    raw = get("source", "histogram_csv")
    if raw is not None:
        path = raw.strip()
        resolved = path if os.path.isabs(path) else os.path.join(base_dir, path)
        cfg = replace(
            cfg, histogram_csv=path, histogram=load_histogram_csv(resolved)
        )

    raw = get("window", "delta")
    if raw is not None:
        cfg = replace(cfg, delta=_parse_float("window", "delta", raw))
    raw = get("window", "epsilon")
    if raw is not None:
        cfg = replace(
            cfg, epsilon=_parse_sentinel_float("window", "epsilon", raw, AUTO)
        )

    det = cfg.detector
    for key in _SCHEMA["detector"]:
        raw = get("detector", key)
        if raw is not None:
            det = replace(det, **{key: _parse_float("detector", key, raw)})
    cfg = replace(cfg, detector=det)

    raw = get("protocol", "name")
    if raw is not None:
        name = raw.strip().replace("-", "_")
        if name == "wv":
            name = "weak_vacuum"
        if name not in PROTOCOLS:
            raise ConfigError(
                f"[protocol] name = {raw.strip()!r}; "
                f"expected one of {', '.join(PROTOCOLS)}"
            )
        cfg = replace(cfg, protocol_name=name)
    raw = get("protocol", "lambda_signal")
    if raw is not None:
        cfg = replace(
            cfg,
            lambda_signal=_parse_sentinel_float(
                "protocol", "lambda_signal", raw, OPTIMIZE
            ),
        )
    raw = get("protocol", "lambda_decoy")
    if raw is not None:
        cfg = replace(
            cfg,
            lambda_decoy=_parse_sentinel_float(
                "protocol", "lambda_decoy", raw, OPTIMIZE
            ),
        )
    raw = get("protocol", "sift_factor")
    if raw is not None:
        cfg = replace(cfg, sift_factor=_parse_float("protocol", "sift_factor", raw))
    raw = get("protocol", "ec_inefficiency")
    if raw is not None:
        cfg = replace(
            cfg, ec_inefficiency=_parse_float("protocol", "ec_inefficiency", raw)
        )

    raw = get("sweep", "distances_km")
    if raw is not None:
        cfg = replace(cfg, distances_km=_parse_float_list("sweep", "distances_km", raw))
    raw = get("sweep", "lambda_min")
    if raw is not None:
        cfg = replace(
            cfg, lambda_min=_parse_sentinel_float("sweep", "lambda_min", raw, AUTO)
        )
    raw = get("sweep", "lambda_max")
    if raw is not None:
        cfg = replace(
            cfg, lambda_max=_parse_sentinel_float("sweep", "lambda_max", raw, AUTO)
        )
    raw = get("sweep", "points_per_decade")
    if raw is not None:
        cfg = replace(
            cfg, points_per_decade=_parse_int("sweep", "points_per_decade", raw)
        )
    raw = get("sweep", "decades")
    if raw is not None:
        cfg = replace(cfg, decades=_parse_float("sweep", "decades", raw))
    raw = get("sweep", "delta_grid")
    if raw is not None:
        cfg = replace(cfg, delta_grid=_parse_float_list("sweep", "delta_grid", raw))
    raw = get("sweep", "max_distance_cap_km")
    if raw is not None:
        cfg = replace(
            cfg,
            max_distance_cap_km=_parse_float("sweep", "max_distance_cap_km", raw),
        )

    raw = get("output", "directory")
    if raw is not None:
        cfg = replace(cfg, output_directory=raw.strip())

    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.mean_photons <= 0:
        raise ConfigError(f"mean_photons must be > 0, got {cfg.mean_photons!r}")
    if not 0.0 < cfg.delta < 1.0:
        raise ConfigError(f"delta must be in (0, 1), got {cfg.delta!r}")
    if cfg.epsilon is not None and not 0.0 <= cfg.epsilon < 1.0:
        raise ConfigError(f"epsilon must be in [0, 1) or auto, got {cfg.epsilon!r}")
    if cfg.failure_exponent <= 0:
        raise ConfigError(
            f"failure_exponent must be > 0, got {cfg.failure_exponent!r}"
        )
    if cfg.distribution == EMPIRICAL_HISTOGRAM and cfg.histogram is None:
        raise ConfigError("empirical_histogram requires histogram_csv")
    if cfg.lambda_signal is not None and not 0.0 < cfg.lambda_signal < 1.0:
        raise ConfigError(
            f"lambda_signal must be in (0, 1) or optimize, got {cfg.lambda_signal!r}"
        )
    if cfg.lambda_decoy is not None:
        if cfg.lambda_signal is None:
            raise ConfigError("lambda_decoy is pinned but lambda_signal is not")
        # lambda_decoy >= lambda_signal is left for the condition check,
        # which rejects it as a condition violation rather than a bad config.
        if not 0.0 < cfg.lambda_decoy < 1.0:
            raise ConfigError(
                f"lambda_decoy must be in (0, 1), got {cfg.lambda_decoy!r}"
            )
    for d in cfg.distances_km:
        if d < 0:
            raise ConfigError(f"distances_km entries must be >= 0, got {d!r}")
    for d in cfg.delta_grid:
        if not 0.0 < d < 1.0:
            raise ConfigError(f"delta_grid entries must be in (0, 1), got {d!r}")
    if cfg.max_distance_cap_km <= 0:
        raise ConfigError(
            f"max_distance_cap_km must be > 0, got {cfg.max_distance_cap_km!r}"
        )


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def _fmt_optional(value: Optional[float], sentinel: str) -> str:
    return sentinel if value is None else repr(value)


def serialize_config(cfg: RunConfig) -> str:
    """INI text that parses back to an equal RunConfig."""
    out = io.StringIO()
    out.write("[source]\n")
    out.write(f"mean_photons = {cfg.mean_photons!r}\n")
    out.write(f"distribution = {cfg.distribution}\n")
    seq = ASYMPTOTIC if cfg.sequence_length is None else str(cfg.sequence_length)
    out.write(f"sequence_length = {seq}\n")
    out.write(f"failure_exponent = {cfg.failure_exponent!r}\n")
    if cfg.histogram_csv is not None:
        out.write(f"histogram_csv = {cfg.histogram_csv}\n")
    out.write("\n[window]\n")
    out.write(f"delta = {cfg.delta!r}\n")
    out.write(f"epsilon = {_fmt_optional(cfg.epsilon, AUTO)}\n")
    out.write("\n[detector]\n")
    det = cfg.detector
    out.write(f"eta_bob = {det.eta_bob!r}\n")
    out.write(f"alpha_db_per_km = {det.alpha_db_per_km!r}\n")
    out.write(f"y0 = {det.y0!r}\n")
    out.write(f"e_det = {det.e_det!r}\n")
    out.write(f"e0 = {det.e0!r}\n")
    out.write("\n[protocol]\n")
    out.write(f"name = {cfg.protocol_name}\n")
    out.write(f"lambda_signal = {_fmt_optional(cfg.lambda_signal, OPTIMIZE)}\n")
    out.write(f"lambda_decoy = {_fmt_optional(cfg.lambda_decoy, OPTIMIZE)}\n")
    out.write(f"sift_factor = {cfg.sift_factor!r}\n")
    out.write(f"ec_inefficiency = {cfg.ec_inefficiency!r}\n")
    out.write("\n[sweep]\n")
    out.write(
        "distances_km = " + ", ".join(repr(d) for d in cfg.distances_km) + "\n"
    )
    out.write(f"lambda_min = {_fmt_optional(cfg.lambda_min, AUTO)}\n")
    out.write(f"lambda_max = {_fmt_optional(cfg.lambda_max, AUTO)}\n")
    out.write(f"points_per_decade = {cfg.points_per_decade}\n")
    out.write(f"decades = {cfg.decades!r}\n")
    out.write("delta_grid = " + ", ".join(repr(d) for d in cfg.delta_grid) + "\n")
    out.write(f"max_distance_cap_km = {cfg.max_distance_cap_km!r}\n")
    out.write("\n[output]\n")
    out.write(f"directory = {cfg.output_directory}\n")
    return out.getvalue()


def save_config(cfg: RunConfig, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_config(cfg))
