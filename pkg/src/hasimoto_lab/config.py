"""Run configuration: flat ``key=value`` text plus command-line overrides."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .experiments import DEFAULT_THRESHOLDS, GateRejected
from .vfe import poincare_gate

COMMANDS = ("transform", "inverse-transform", "evolve-vfe", "evolve-nls",
            "equivalence", "arc-stability", "plane-stability", "conserved")
STABILITY_COMMANDS = ("arc-stability", "plane-stability")
OUTPUT_ENV = "HASIMOTO_LAB_OUTPUT"

DEFAULT_T = {"equivalence": 0.5, "arc-stability": 10.0, "plane-stability": 10.0}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


def _float(key, text):
    try:
        x = float(text)
    except ValueError:
        raise ConfigError(key, f"malformed number {text!r}") from None
    if not math.isfinite(x):
        raise ConfigError(key, f"must be finite, got {text!r}")
    return x


def _positive(key, text):
    x = _float(key, text)
    if x <= 0:
        raise ConfigError(key, f"must be positive, got {text!r}")
    return x


def _nonneg(key, text):
    x = _float(key, text)
    if x < 0:
        raise ConfigError(key, f"must be nonnegative, got {text!r}")
    return x


def _int(key, text, minimum=1):
    try:
        n = int(text)
    except ValueError:
        raise ConfigError(key, f"malformed integer {text!r}") from None
    if n < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {n}")
    return n


def _float_list(key, text, conv=_nonneg):
    items = [x.strip() for x in str(text).split(",") if x.strip()]
    if not items:
        raise ConfigError(key, "empty list")
    return [conv(key, x) for x in items]


def _int_list(key, text):
    return [_int(key, x) for x in str(text).split(",") if x.strip()]


def _modes(key, text):
    """``k:amp,k:amp`` with complex amplitudes, e.g. ``1:1.0,2:0.5j``."""
    out = []
    for item in str(text).split(","):
        k, sep, a = item.strip().partition(":")
        kk = _int(key, k)
        try:
            amp = complex(a.strip()) if sep else 1.0
        except ValueError:
            raise ConfigError(key, f"malformed amplitude {a!r}") from None
        out.append((kk, amp))
    return out


def _text(key, text):
    return str(text)


PARAMETERS = {
    # key: (parser, default, description)
    "L": (_positive, math.pi, "interval length"),
    "R": (_positive, 2.0, "arc radius / plane-wave amplitude 1/R"),
    "N": (lambda k, x: _int(k, x, 8), 256, "number of grid cells"),
    "T": (_positive, 1.0, "final time (equivalence 0.5, stability sweeps 10)"),
    "dt": (_nonneg, 0.0, "time step; 0 selects the solver default"),
    "delta": (_nonneg, 1e-2, "perturbation size for single runs"),
    "deltas": (_float_list, [1e-3, 1e-2, 1e-1], "perturbation sizes of a sweep"),
    "modes": (_modes, [(1, 1.0)], "perturbation modes k:amplitude"),
    "seed": (lambda k, x: _int(k, x, 0), 0, "random seed"),
    "samples": (_int, 100, "number of random samples (perturbation transfer)"),
    "sample_dt": (_positive, 0.1, "sampling interval of time series"),
    "cfl": (_positive, 0.25, "VFE step dt = cfl * ds^2"),
    "fp_tol": (_positive, 1e-12, "fixed-point tolerance of the VFE step"),
    "resolutions": (_int_list, [64, 128, 256], "grid sizes of the equivalence refinement"),
    "vfe_N": (lambda k, x: _int(k, x, 0), 0, "VFE-route grid size of the plane-wave sweep; 0 = N"),
    "flow": (_text, "vfe", "trajectory type of the conserved suite: vfe or nls"),
    "workers": (_int, 1, "parallel sweep workers"),
    "input": (_text, "", "input trajectory file (transform, conserved)"),
    "output": (_text, "", f"output directory; default ${OUTPUT_ENV} or ./hasimoto_out"),
    "plots": (_text, "yes", "render PNG figures next to the CSV bundle (yes/no)"),
}
PARAMETERS.update({k: (_positive, v, "verdict threshold") for k, v in DEFAULT_THRESHOLDS.items()})


@dataclass
class RunConfig:
    command: str
    parameters: dict = field(default_factory=dict)

    def thresholds(self) -> dict:
        return {k: self.parameters[k] for k in DEFAULT_THRESHOLDS}

    def output_dir(self) -> Path:
        return Path(self.parameters["output"])

    def echo(self) -> dict:
        """JSON-friendly copy of the parameters for artifact headers."""
        out = {"command": self.command}
        for k, v in self.parameters.items():
            if k == "modes":
                v = [[kk, str(a)] for kk, a in v]
            out[k] = v
        return out


def parse_text(text: str) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"line {n}", f"expected key=value, got {raw!r}")
        out[key.strip()] = val.strip()
    return out


def parse_config(command: str, text: str = "",
                 flags: dict[str, str] | None = None) -> RunConfig:
    """Validated configuration; flags override the file, which overrides defaults.

    Raises:
        ConfigError: unknown command or key, malformed or out-of-range value.
        GateRejected: stability command with R <= L/pi.
    """
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    raw = parse_text(text)
    raw.update(flags or {})
    for key in raw:
        if key not in PARAMETERS:
            raise ConfigError(key, "unknown key")
    params = {}
    for key, (conv, default, _) in PARAMETERS.items():
        params[key] = conv(key, raw[key]) if key in raw else default
    if "T" not in raw:
        params["T"] = DEFAULT_T.get(command, params["T"])
    if not params["output"]:
        params["output"] = os.environ.get(OUTPUT_ENV, "hasimoto_out")
    params["deltas"] = sorted(params["deltas"])
    if params["flow"] not in ("vfe", "nls"):
        raise ConfigError("flow", f"must be vfe or nls, got {params['flow']!r}")
    if params["plots"] not in ("yes", "no"):
        raise ConfigError("plots", f"must be yes or no, got {params['plots']!r}")
    if command in STABILITY_COMMANDS and poincare_gate(params["L"], params["R"]) is None:
        raise GateRejected(params["L"], params["R"])
    return RunConfig(command, params)
