"""Flat ``key = value`` run configuration."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace

from .greeks import GREEKS, METHODS, CPW, GreekRequest, default_request
from .instruments import DOWN_OUT, INSTRUMENTS
from .paths import SCHEMES, MarketSpec
from .estimators import MC, RQMC, DEFAULT_REPLICATES

TABLES = ("prices", "gsa_do", "gsa_asian")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str, line: int | None = None):
        self.key = key
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{key}: {message}")


@dataclass(frozen=True)
class RunConfig:
    instrument: str = "asian_call"
    barrier: float | None = None
    scheme: str = "bbd"
    sampler: str = RQMC
    method: str = "fd"
    importance_sampling: bool = False
    greek: str | None = None
    budgets: tuple[int, ...] = tuple(2**p for p in range(10, 19))
    replicates: int = DEFAULT_REPLICATES
    master_seed: int = 20240901
    fd_shift: float | None = None
    ci_width: float | None = None
    ci_points: int = 7
    spot: float = 100.0
    rate: float = 0.03
    sigma: float = 0.30
    maturity: float = 0.25
    steps: int = 32
    strike: float = 100.0
    widths: tuple[float, ...] = ()
    reference_budget: int = 2**20
    table: str = "prices"
    output: str = "results"

    @property
    def spec(self) -> MarketSpec:
        return MarketSpec(S0=self.spot, r=self.rate, sigma=self.sigma, T=self.maturity,
                          steps=self.steps, K=self.strike, B=self.barrier)

    @property
    def budget(self) -> int:
        return self.budgets[-1]

    def request(self) -> GreekRequest:
        if self.greek is None:
            raise ConfigError("greek", "required for this subcommand")
        base = default_request(self.instrument, self.greek, self.method, self.spec, self.ci_points)
        try:
            return replace(base,
                           fd_shift=base.fd_shift if self.fd_shift is None else self.fd_shift,
                           ci_width=base.ci_width if self.ci_width is None else self.ci_width)
        except ValueError as exc:
            raise ConfigError(self.method, str(exc)) from None

    def validate(self) -> "RunConfig":
        choices = {"instrument": INSTRUMENTS, "scheme": SCHEMES, "sampler": (MC, RQMC),
                   "method": METHODS, "table": TABLES}
        for key, allowed in choices.items():
            if getattr(self, key) not in allowed:
                raise ConfigError(key, f"must be one of {', '.join(allowed)}")
        if self.greek is not None and self.greek not in GREEKS:
            raise ConfigError("greek", f"must be one of {', '.join(GREEKS)}")
        if self.instrument == DOWN_OUT and self.barrier is None:
            raise ConfigError("barrier", "required for down_out_call")
        if self.importance_sampling:
            if self.instrument != DOWN_OUT:
                raise ConfigError("importance_sampling", "requires down_out_call")
            if self.method == CPW:
                raise ConfigError("importance_sampling", "cannot be combined with cpw")
        if not self.budgets:
            raise ConfigError("budgets", "at least one budget is required")
        for n in self.budgets:
            if n < 2 or n & (n - 1):
                raise ConfigError("budgets", f"{n} is not a power of two")
        if self.sampler == RQMC:
            if self.replicates < 2:
                raise ConfigError("replicates", "RQMC needs at least 2")
            for n in self.budgets:
                if n % self.replicates or (n // self.replicates) & (n // self.replicates - 1):
                    raise ConfigError("budgets", f"{n} is not n*K with n a power of two")
        try:
            self.spec
        except ValueError as exc:
            raise ConfigError("market", str(exc)) from None
        return self

    def hash(self) -> str:
        return hashlib.sha256(serialize(self).encode()).hexdigest()[:12]


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _parse_int(text: str) -> int:
    text = text.strip()
    if text.startswith("2^"):
        return 2 ** int(text[2:])
    return int(text)


def _coerce(key: str, text: str):
    default = getattr(RunConfig, key, None)
    text = text.strip()
    if key in ("barrier", "greek", "fd_shift", "ci_width") and text.lower() in ("", "none"):
        return None
    if key == "budgets":
        return tuple(_parse_int(t) for t in text.split(",") if t.strip())
    if key == "widths":
        return tuple(float(t) for t in text.split(",") if t.strip())
    if key == "importance_sampling":
        if text.lower() in ("true", "yes", "1"):
            return True
        if text.lower() in ("false", "no", "0"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if key in ("replicates", "master_seed", "ci_points", "steps", "reference_budget"):
        return _parse_int(text)
    if key in ("barrier", "fd_shift", "ci_width", "spot", "rate", "sigma", "maturity", "strike"):
        return float(text)
    if isinstance(default, str) or key == "greek":
        return text
    raise ValueError(f"cannot parse {text!r}")


def apply(config: RunConfig, key: str, text: str, line: int | None = None) -> RunConfig:
    if key not in _FIELDS:
        raise ConfigError(key, "unknown key", line)
    try:
        value = _coerce(key, text)
    except ValueError as exc:
        raise ConfigError(key, str(exc), line) from None
    return replace(config, **{key: value})


def parse(text: str, base: RunConfig | None = None) -> RunConfig:
    config = base or RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line, "expected 'key = value'", lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        config = apply(config, key, value, lineno)
    return config


def _render(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(config: RunConfig) -> str:
    return "".join(f"{f.name} = {_render(getattr(config, f.name))}\n" for f in fields(RunConfig))
