"""Run configuration: a flat TOML file of ``key = value`` lines.

Complex numbers may be given as numbers, as ``[re, im]`` pairs, or as strings
such as ``"0.5+0.1j"``.  Times are in the model's native units.

Validation errors name the offending key and its line in the file.
"""

from dataclasses import dataclass, field, asdict
import re

from .errors import ConfigurationError

try:
    import tomllib as _toml
except ImportError:  # Python < 3.11
    import tomli as _toml

MODEL_KEYS = {
    "absorber": {"gamma", "epsilon"},
    "laser": {"G", "Q", "N_scale"},
    "laser_number": {"G", "Q", "N_scale"},
    "kerr": {"omega0", "kappa"},
    "weight_toy": {"n_noises"},
}
GAUGES = ("none", "circular", "laser", "constant")
INITS = ("coherent", "gaussian", "fock")


@dataclass
class RunConfig:
    model: str = "absorber"
    params: dict = field(default_factory=dict)
    gauge: str = "none"
    gauge_lambda: float = 4.0
    gauge_values: tuple = ()
    diffusion_g: tuple = ()
    init: str = "coherent"
    init_alpha: complex = 0.0
    init_sigma0sq: float = 0.0
    init_fock: int = 0
    n_traj: int = 1000
    batch_count: int = 20
    seed: int = 1
    scheme: str = "strat_semi_implicit"
    midpoint_iters: int = 3
    dt: float = 0.01
    t_end: float = 1.0
    record_stride: int = 1
    ramp_factor: float = 1.0
    ramp_stage_steps: int = 0
    moments: tuple = ((1, 1),)
    mode: int = 0
    workers: int = 1
    overflow_guard: float = 1e10
    abort_fraction: float = 0.5
    csv: str = "series.csv"
    summary: str = "summary.json"
    oracle_dim: int = 0
    oracle_dt: float = 1e-3
    oracle_method: str = "auto"
    sweep_param: str = ""
    sweep_values: tuple = ()
    readout_time: float = -1.0
    label: str = ""

    def to_dict(self):
        d = asdict(self)
        d["init_alpha"] = _complex_out(self.init_alpha)
        d["params"] = {k: _complex_out(v) for k, v in self.params.items()}
        d["gauge_values"] = [_complex_out(v) for v in self.gauge_values]
        d["diffusion_g"] = [_complex_out(v) for v in self.diffusion_g]
        d["sweep_values"] = [_complex_out(v) for v in self.sweep_values]
        d["moments"] = [list(m) for m in self.moments]
        return d

    def replace(self, **kw):
        d = dict(self.__dict__)
        d.update(kw)
        return RunConfig(**d)


def _complex_out(v):
    if isinstance(v, complex):
        return [v.real, v.imag] if v.imag else v.real
    return v


def parse_complex(v, key="value"):
    if isinstance(v, bool):
        raise ConfigurationError(f"{key}: expected a number")
    if isinstance(v, (int, float, complex)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
        return complex(v[0], v[1])
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", ""))
        except ValueError:
            pass
    raise ConfigurationError(f"{key}: cannot read {v!r} as a complex number")


class _Located:
    """Attach file/line context to validation errors."""

    def __init__(self, text, source):
        self.lines = {}
        self.source = source
        for i, line in enumerate(text.splitlines(), 1):
            m = re.match(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=", line)
            if m and m.group(1) not in self.lines:
                self.lines[m.group(1)] = i

    def error(self, key, msg):
        where = f"{self.source}:{self.lines[key]}" if key in self.lines else self.source
        return ConfigurationError(f"{where}: {key}: {msg}")


_INT = {"n_traj", "batch_count", "seed", "midpoint_iters", "record_stride", "ramp_stage_steps",
        "mode", "workers", "init_fock", "oracle_dim"}
_FLOAT = {"gauge_lambda", "init_sigma0sq", "dt", "t_end", "ramp_factor", "overflow_guard",
          "abort_fraction", "oracle_dt", "readout_time"}
_STR = {"model", "gauge", "init", "scheme", "csv", "summary", "oracle_method", "sweep_param",
        "label"}
_PARAM = {"gamma", "epsilon", "G", "Q", "N_scale", "omega0", "kappa", "n_noises"}


def from_mapping(data, loc=None):
    """Build and validate a :class:`RunConfig` from a flat mapping."""
    loc = loc or _Located("", "<config>")
    cfg = RunConfig()
    params = {}
    for key, v in data.items():
        if isinstance(v, dict):
            raise loc.error(key, "nested tables are not supported; use flat keys")
        try:
            if key in _INT:
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ConfigurationError("expected an integer")
                setattr(cfg, key, int(v))
            elif key in _FLOAT:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigurationError("expected a number")
                setattr(cfg, key, float(v))
            elif key in _STR:
                if not isinstance(v, str):
                    raise ConfigurationError("expected a string")
                setattr(cfg, key, v)
            elif key in _PARAM:
                if key == "n_noises":
                    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                        raise ConfigurationError("expected an integer >= 1")
                    params[key] = v
                else:
                    params[key] = parse_complex(v, key) if key == "epsilon" else _real(v)
            elif key == "init_alpha":
                cfg.init_alpha = parse_complex(v, key)
            elif key in ("gauge_values", "diffusion_g"):
                setattr(cfg, key, tuple(parse_complex(c, key) for c in _list(v)))
            elif key == "sweep_values":
                cfg.sweep_values = tuple(_list(v))
            elif key == "moments":
                ms = []
                for pair in _list(v):
                    if (not isinstance(pair, list) or len(pair) != 2
                            or not all(isinstance(c, int) and c >= 0 for c in pair)):
                        raise ConfigurationError("expected [[n, m], ...] with integers >= 0")
                    ms.append((pair[0], pair[1]))
                cfg.moments = tuple(ms)
            else:
                raise ConfigurationError("unknown key")
        except ConfigurationError as e:
            raise loc.error(key, str(e).split(": ")[-1]) from None
    cfg.params = params
    validate(cfg, loc)
    return cfg


def _real(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigurationError("expected a real number")
    return float(v)


def _list(v):
    if not isinstance(v, list):
        raise ConfigurationError("expected a list")
    return v


def validate(cfg, loc=None):
    """Cross-field checks run before any computation."""
    loc = loc or _Located("", "<config>")
    if cfg.model not in MODEL_KEYS:
        raise loc.error("model", f"unknown model {cfg.model!r}; choose from {sorted(MODEL_KEYS)}")
    for k in cfg.params:
        if k not in MODEL_KEYS[cfg.model]:
            raise loc.error(k, f"not a parameter of model {cfg.model!r}")
    if cfg.model.startswith("laser"):
        for k in ("G", "Q"):
            if k not in cfg.params:
                raise loc.error("model", f"laser models need {k}")
    if cfg.gauge not in GAUGES:
        raise loc.error("gauge", f"unknown gauge {cfg.gauge!r}; choose from {GAUGES}")
    if cfg.gauge == "circular" and cfg.model != "absorber":
        raise loc.error("gauge", "the circular gauge applies to the absorber only")
    if cfg.gauge == "laser" and not cfg.model.startswith("laser"):
        raise loc.error("gauge", "the laser gauge applies to laser models only")
    if cfg.gauge == "constant" and not cfg.gauge_values:
        raise loc.error("gauge_values", "constant gauge needs gauge_values")
    if cfg.diffusion_g and cfg.model != "kerr":
        raise loc.error("diffusion_g", "diffusion gauges are provided for the kerr model")
    if cfg.init not in INITS:
        raise loc.error("init", f"unknown initial condition {cfg.init!r}; choose from {INITS}")
    if cfg.init == "fock" and cfg.model != "absorber":
        raise loc.error("init", "Fock initial states are only available to the oracle "
                                "(absorber)")
    if cfg.init_sigma0sq < 0:
        raise loc.error("init_sigma0sq", "must be >= 0")
    for key in ("n_traj", "batch_count", "record_stride", "midpoint_iters", "workers"):
        if getattr(cfg, key) < 1:
            raise loc.error(key, "must be >= 1")
    if cfg.batch_count < 2:
        raise loc.error("batch_count", "must be >= 2")
    if cfg.n_traj % cfg.batch_count:
        raise loc.error("n_traj", f"{cfg.n_traj} is not divisible by batch_count="
                                  f"{cfg.batch_count}")
    if cfg.scheme not in ("ito_euler", "strat_semi_implicit"):
        raise loc.error("scheme", "must be ito_euler or strat_semi_implicit")
    if not cfg.dt > 0:
        raise loc.error("dt", "must be > 0")
    if cfg.t_end < 0:
        raise loc.error("t_end", "must be >= 0")
    if cfg.t_end > 0 and cfg.dt > cfg.t_end:
        raise loc.error("dt", "must not exceed t_end")
    steps = cfg.t_end / cfg.dt
    if cfg.ramp_stage_steps == 0:
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise loc.error("t_end", f"not a multiple of dt={cfg.dt}")
        if round(steps) % cfg.record_stride:
            raise loc.error("record_stride", f"must divide the step count {round(steps)}")
    elif cfg.ramp_factor < 1:
        raise loc.error("ramp_factor", "must be >= 1")
    for n, m in cfg.moments:
        if cfg.model == "laser_number" and n != m:
            raise loc.error("moments", "the number-reduced laser supports only n == m")
    if cfg.oracle_method not in ("auto", "rk4", "exact"):
        raise loc.error("oracle_method", "must be auto, rk4 or exact")
    if cfg.sweep_param:
        if not cfg.sweep_values:
            raise loc.error("sweep_values", "empty sweep list")
        if cfg.sweep_param not in RunConfig.__dataclass_fields__ and \
                cfg.sweep_param not in _PARAM:
            raise loc.error("sweep_param", f"unknown parameter {cfg.sweep_param!r}")
    return cfg


def load(path):
    """Read and validate a config file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    text = raw.decode("utf-8")
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as e:
        raise ConfigurationError(f"{path}: {e}") from None
    return from_mapping(data, _Located(text, str(path)))


def loads(text, source="<string>"):
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as e:
        raise ConfigurationError(f"{source}: {e}") from None
    return from_mapping(data, _Located(text, source))


def with_overrides(cfg, **kw):
    """Copy with overrides applied and re-validated."""
    out = cfg.replace(**{k: v for k, v in kw.items() if v is not None})
    return validate(out)


def record_interval(cfg):
    return cfg.dt * cfg.record_stride


def sweep_point(cfg, value):
    """Config for a single sweep value."""
    key = cfg.sweep_param
    if key in _PARAM:
        params = dict(cfg.params)
        params[key] = parse_complex(value, key) if key == "epsilon" else float(value)
        return validate(cfg.replace(params=params, sweep_param="", sweep_values=()))
    cur = getattr(cfg, key)
    if isinstance(cur, complex) or key == "init_alpha":
        value = parse_complex(value, key)
    elif isinstance(cur, bool):
        raise ConfigurationError(f"{key} cannot be swept")
    elif isinstance(cur, int):
        value = int(value)
    elif isinstance(cur, float):
        value = float(value)
    return validate(cfg.replace(**{key: value, "sweep_param": "", "sweep_values": ()}))
