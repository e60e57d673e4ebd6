"""Run configuration: a TOML document of flat tables, validated into :class:`RunConfig`.

Tables and keys (all optional; defaults in brackets)::

    [run]          seed [1], replicas [20], workers [1], out [$MOBILEGRAPH_OUT or "."]
    [domain]       kind ["torus"], dim [1], volume [1024], side [1024]
    [process]      intensity [4.0], origin_mark [none]
    [kernel]       variant ["generic"], gamma [0.8], delta [1.5], alpha [1], kappa1 [1], beta [1]
    [layers]       theta [0.6], eps_theta [0.1]
    [time]         dt_obs [0.25], t_max [200]
    [broadcast]    volumes [[256, 512, 1024]], log_eps [0.5]
    [percolation]  rho [0.25]
    [diagnose]     K [[256, 1024, 4096]], b [2^-2d], eps_theta [eps_theta], alpha_dense [0.5],
                   ell [8], density_steps [64], connector_volume [256], connector_replicas [200]
    [convergence]  dt_list [[1, 0.5, 0.25, 0.125]]
"""
from dataclasses import dataclass, field, asdict, replace
import hashlib
import json
import logging
import math

from .errors import ConfigError, InvalidInput
from .geometry import Domain
from .kernels import KernelParams

try:
    import tomllib
except ModuleNotFoundError:       # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

# keys excluded from the config hash: they change how, not what, is computed
_NON_SEMANTIC = ("workers", "out")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 1
    replicas: int = 20
    workers: int = 1
    out: str = ""
    kind: str = "torus"
    dim: int = 1
    volume: float = 1024.0
    side: float = 1024.0
    intensity: float = 4.0
    origin_mark: float | None = None
    variant: str = "generic"
    gamma: float = 0.8
    delta: float = 1.5
    alpha: float = 1.0
    kappa1: float = 1.0
    beta: float = 1.0
    theta: float = 0.6
    eps_theta: float = 0.1
    dt_obs: float = 0.25
    t_max: float = 200.0
    volumes: tuple = (256.0, 512.0, 1024.0)
    log_eps: float = 0.5
    rho: float = 0.25
    K: tuple = (256.0, 1024.0, 4096.0)
    b: float | None = None
    spread_eps_theta: float | None = None
    alpha_dense: float = 0.5
    ell: float = 8.0
    density_steps: int = 64
    connector_volume: float = 256.0
    connector_replicas: int = 200
    dt_list: tuple = (1.0, 0.5, 0.25, 0.125)
    warnings: tuple = field(default=(), compare=False)

    @property
    def kernel(self):
        return KernelParams(self.variant, self.gamma, self.delta, self.alpha,
                            self.kappa1, self.beta, self.dim)

    def domain(self, size=None):
        if self.kind == "torus":
            return Domain.torus(self.volume if size is None else size, self.dim)
        return Domain.box(self.side if size is None else size, self.dim)

    def t_grid(self, dt=None):
        dt = self.dt_obs if dt is None else dt
        n = int(math.floor(self.t_max / dt + 1e-9))
        return [k * dt for k in range(n + 1)]

    def to_dict(self):
        d = asdict(self)
        d.pop("warnings")
        for k in ("volumes", "K", "dt_list"):
            d[k] = list(d[k])
        return d

    def sha256(self):
        d = self.to_dict()
        for k in _NON_SEMANTIC:
            d.pop(k)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# table -> {toml key: field name}
_LAYOUT = {
    "run": {"seed": "seed", "replicas": "replicas", "workers": "workers", "out": "out"},
    "domain": {"kind": "kind", "dim": "dim", "volume": "volume", "side": "side"},
    "process": {"intensity": "intensity", "origin_mark": "origin_mark"},
    "kernel": {k: k for k in ("variant", "gamma", "delta", "alpha", "kappa1", "beta")},
    "layers": {"theta": "theta", "eps_theta": "eps_theta"},
    "time": {"dt_obs": "dt_obs", "t_max": "t_max"},
    "broadcast": {"volumes": "volumes", "log_eps": "log_eps"},
    "percolation": {"rho": "rho"},
    "diagnose": {"K": "K", "b": "b", "eps_theta": "spread_eps_theta",
                 "alpha_dense": "alpha_dense", "ell": "ell", "density_steps": "density_steps",
                 "connector_volume": "connector_volume",
                 "connector_replicas": "connector_replicas"},
    "convergence": {"dt_list": "dt_list"},
}
_FIELD_TYPES = {f: type(v) for f, v in asdict(RunConfig()).items()}
_INT_FIELDS = {"seed", "replicas", "workers", "dim", "density_steps", "connector_replicas"}
_TUPLE_FIELDS = {"volumes", "K", "dt_list"}
_OPTIONAL_FLOATS = {"origin_mark", "b", "spread_eps_theta"}


def _coerce(name, value):
    try:
        if name in _TUPLE_FIELDS:
            vals = value if isinstance(value, (list, tuple)) else [value]
            return tuple(float(v) for v in vals)
        if name in _INT_FIELDS:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if name in _OPTIONAL_FLOATS:
            return None if value is None else float(value)
        if _FIELD_TYPES[name] is str:
            return str(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {name}: {value!r}") from None


def from_tables(tables):
    """Build a validated :class:`RunConfig` from nested TOML tables."""
    kw = {}
    for table, body in tables.items():
        if table not in _LAYOUT:
            raise ConfigError(f"unknown table [{table}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{table}] must be a table")
        for key, value in body.items():
            if key not in _LAYOUT[table]:
                raise ConfigError(f"unknown key {table}.{key}")
            name = _LAYOUT[table][key]
            kw[name] = _coerce(name, value)
    return validate(RunConfig(**kw))


def load(path):
    with open(path, "rb") as fh:
        try:
            tables = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return from_tables(tables)


def override(cfg, **changes):
    """Copy with ``changes`` applied (``None`` values are ignored) and re-validated."""
    changes = {k: _coerce(k, v) for k, v in changes.items() if v is not None}
    return validate(replace(cfg, **changes)) if changes else cfg


def apply_assignments(cfg, assignments):
    """Apply ``table.key=value`` strings (values parsed as TOML)."""
    tables = {}
    for item in assignments:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"expected table.key=value, got {item!r}")
        lhs, rhs = item.split("=", 1)
        table, key = lhs.strip().split(".", 1)
        try:
            value = tomllib.loads(f"v = {rhs.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            value = rhs.strip()
        if table not in _LAYOUT or key not in _LAYOUT[table]:
            raise ConfigError(f"unknown key {lhs}")
        tables.setdefault(table, {})[key] = value
    changes = {_LAYOUT[t][k]: _coerce(_LAYOUT[t][k], v)
               for t, body in tables.items() for k, v in body.items()}
    return validate(replace(cfg, **changes)) if changes else cfg


def theta_window(gamma, delta):
    return math.log(2) / (gamma + gamma / delta), math.log(2)


def validate(cfg):
    """Raise :class:`ConfigError` on invalid values; attach regime warnings."""
    try:
        kp = cfg.kernel
        cfg.domain()
    except InvalidInput as exc:
        raise ConfigError(str(exc)) from None
    if cfg.kind not in ("torus", "box"):
        raise ConfigError(f"domain kind must be torus or box, not {cfg.kind!r}")
    checks = [
        (cfg.seed >= 0, "seed must be nonnegative"),
        (cfg.replicas >= 1, "replicas must be at least 1"),
        (cfg.workers >= 1, "workers must be at least 1"),
        (cfg.intensity > 0, "intensity must be positive"),
        (cfg.origin_mark is None or 0 < cfg.origin_mark < 1, "origin_mark must lie in (0, 1)"),
        (cfg.dt_obs > 0 and cfg.t_max >= 0, "need dt_obs > 0 and t_max >= 0"),
        (0 < cfg.eps_theta < 1 / math.log(2), "eps_theta must lie in (0, 1/log 2)"),
        (cfg.spread_eps_theta is None or 0 < cfg.spread_eps_theta < 1 / math.log(2),
         "diagnose.eps_theta must lie in (0, 1/log 2)"),
        (0 < cfg.rho < 1, "rho must lie in (0, 1)"),
        (0 <= cfg.alpha_dense <= 1, "alpha_dense must lie in [0, 1]"),
        (cfg.ell > 0 and cfg.density_steps >= 1, "need ell > 0 and density_steps >= 1"),
        (cfg.b is None or cfg.b > 0, "b must be positive"),
        (all(v > 0 for v in cfg.volumes) and len(cfg.volumes) > 0, "volumes must be positive"),
        (all(k >= 1 for k in cfg.K) and len(cfg.K) > 0, "K values must be at least 1"),
        (all(x > 0 for x in cfg.dt_list) and len(cfg.dt_list) > 0, "dt_list must be positive"),
        (list(cfg.dt_list) == sorted(cfg.dt_list, reverse=True), "dt_list must be decreasing"),
        (cfg.connector_volume > 0 and cfg.connector_replicas >= 1, "bad connector settings"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigError(msg)
    warns = []
    if not kp.ultrasmall:
        warns.append(f"gamma={cfg.gamma} <= delta/(delta+1)={cfg.delta / (cfg.delta + 1):.4g}: "
                     "outside the ultrasmall regime")
    lo, hi = theta_window(cfg.gamma, cfg.delta)
    if not lo < cfg.theta < hi:
        warns.append(f"theta={cfg.theta} outside ({lo:.4g}, {hi:.4g})")
    for w in warns:
        log.warning(w)
    return replace(cfg, warnings=tuple(warns))
