"""Declarative run configuration: strict parsing and validation.

Configs are YAML (or JSON) mappings whose physical quantities carry the
unit in the key name (``temperature_K``, ``position_m``,
``omega_p_rad_s``, ``radius_lambda_T`` ...).  Unknown keys, missing
required fields and type mismatches are reported with the source line
when available.  Validation happens entirely before any computation.
"""

import json
import math
from dataclasses import dataclass

import yaml

from .errors import ConfigError
from .fieldmap import GridSpec
from .interaction import MIN_SEPARATION_LAMBDA, ParticleSpec
from .materials import MagnetoOpticalModel, ToyPolarizability
from .thermal import MatsubaraPolicy, ThermalContext

TASKS = ("energy", "force", "map", "scan-angle", "laplacian-map",
         "three-body", "validate-asymptotics")

_PAIR_TASKS = ("energy", "force", "map", "scan-angle", "laplacian-map")


def _line_map(text):
    """Map tuple paths into the YAML document to 1-based line numbers."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        raise ConfigError(f"YAML parse error: {err}",
                          line=None if mark is None else mark.line + 1)
    lines = {}

    def walk(node, path):
        lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k_node, v_node in node.value:
                walk(v_node, path + (str(k_node.value),))
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                walk(item, path + (i,))

    if root is not None:
        walk(root, ())
    return lines


class _Cfg:
    """Validated access into the parsed config tree."""

    def __init__(self, data, lines, path):
        self.data = data
        self.lines = lines
        self.path = path

    def fail(self, keypath, message):
        raise ConfigError(message, path=self.path,
                          line=self.lines.get(tuple(keypath)))

    def mapping(self, node, keypath):
        if not isinstance(node, dict):
            self.fail(keypath, f"'{_join(keypath)}' must be a mapping")
        return node

    def check_unknown(self, node, keypath, allowed):
        for key in node:
            if key not in allowed:
                self.fail(keypath + [key],
                          f"unknown key '{_join(keypath + [key])}' "
                          f"(allowed: {', '.join(sorted(allowed))})")

    def number(self, node, keypath, *, minimum=None, positive=False):
        if isinstance(node, bool) or not isinstance(node, (int, float)):
            self.fail(keypath, f"'{_join(keypath)}' must be a number, "
                               f"got {node!r}")
        val = float(node)
        if positive and not val > 0:
            self.fail(keypath, f"'{_join(keypath)}' must be > 0, got {val}")
        if minimum is not None and val < minimum:
            self.fail(keypath, f"'{_join(keypath)}' must be >= {minimum}")
        return val

    def integer(self, node, keypath, *, minimum=None):
        if isinstance(node, bool) or not isinstance(node, int):
            self.fail(keypath, f"'{_join(keypath)}' must be an integer")
        if minimum is not None and node < minimum:
            self.fail(keypath, f"'{_join(keypath)}' must be >= {minimum}")
        return int(node)

    def vector3(self, node, keypath):
        if not isinstance(node, (list, tuple)) or len(node) != 3:
            self.fail(keypath, f"'{_join(keypath)}' must be a 3-element list")
        return [self.number(v, keypath + [i]) for i, v in enumerate(node)]

    def choice(self, node, keypath, options):
        if node not in options:
            self.fail(keypath, f"'{_join(keypath)}' must be one of "
                               f"{sorted(options)}, got {node!r}")
        return node


def _join(keypath):
    out = ""
    for part in keypath:
        out = f"{out}[{part}]" if isinstance(part, int) else \
            (f"{out}.{part}" if out else str(part))
    return out


@dataclass(frozen=True, eq=False)
class ResolvedRun:
    """A fully validated run: engine objects plus the resolved config
    echo that gets embedded into every output."""

    task: str
    ctx: ThermalContext
    policy: MatsubaraPolicy
    method: str
    min_separation: float
    threads: int
    particles: tuple
    grid: GridSpec | None
    scan: dict | None
    asymptotics: dict | None
    force_opts: dict | None
    output: dict
    resolved: dict
    source_path: str | None


def load_config(path, task=None, threads=None):
    """Read, parse and validate a config file (.yaml/.yml/.json)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if str(path).endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"JSON parse error: {err.msg}", path=str(path),
                              line=err.lineno)
        lines = {}
    else:
        lines = _line_map(text)
        data = yaml.safe_load(text)
    return validate_config(data, lines, str(path), task=task, threads=threads)


_TOP_KEYS = {"task", "temperature_K", "min_separation_lambda_T", "matsubara",
             "method", "threads", "particles", "force", "grid", "scan",
             "asymptotics", "output"}

_MATERIAL_KEYS = {
    "toy": {"kind", "alpha0_m3", "b", "axis"},
    "magneto_optical": {"kind", "omega_p_rad_s", "omega_tau_rad_s",
                        "omega_b_rad_s", "radius_m", "axis"},
}


def validate_config(data, lines=None, path=None, task=None, threads=None):
    """Validate a parsed config mapping into a ResolvedRun.

    ``task`` (from the CLI subcommand) must agree with the config's task
    field when both are present; ``threads`` overrides the config value.
    """
    cfg = _Cfg(data, lines or {}, path)
    data = cfg.mapping(data if data is not None else {}, [])
    cfg.check_unknown(data, [], _TOP_KEYS)
    resolved = {}

    cfg_task = data.get("task")
    if cfg_task is not None:
        cfg_task = cfg.choice(cfg_task, ["task"], TASKS)
    if task is not None and cfg_task is not None and task != cfg_task:
        cfg.fail(["task"], f"config task '{cfg_task}' does not match "
                           f"requested task '{task}'")
    final_task = task or cfg_task
    if final_task is None:
        cfg.fail(["task"], "no task given (config 'task' field or subcommand)")
    resolved["task"] = final_task

    if "temperature_K" not in data:
        cfg.fail([], "missing required key 'temperature_K'")
    temperature = cfg.number(data["temperature_K"], ["temperature_K"],
                             positive=True)
    resolved["temperature_K"] = temperature
    ctx = ThermalContext(temperature=temperature)

    min_sep = cfg.number(data.get("min_separation_lambda_T",
                                  MIN_SEPARATION_LAMBDA),
                         ["min_separation_lambda_T"], positive=True)
    resolved["min_separation_lambda_T"] = min_sep

    mats = cfg.mapping(data.get("matsubara", {}), ["matsubara"])
    cfg.check_unknown(mats, ["matsubara"],
                      {"rel_tol", "abs_tol_kT", "n_max", "n_min"})
    policy_kw = {
        "rel_tol": cfg.number(mats.get("rel_tol", 1e-12),
                              ["matsubara", "rel_tol"], minimum=0.0),
        "abs_tol": cfg.number(mats.get("abs_tol_kT", 0.0),
                              ["matsubara", "abs_tol_kT"], minimum=0.0),
        "n_max": cfg.integer(mats.get("n_max", 200_000),
                             ["matsubara", "n_max"], minimum=1),
        "n_min": cfg.integer(mats.get("n_min", 3),
                             ["matsubara", "n_min"], minimum=1),
    }
    try:
        policy = MatsubaraPolicy(**policy_kw)
    except ValueError as err:
        cfg.fail(["matsubara"], str(err))
    resolved["matsubara"] = {"rel_tol": policy.rel_tol,
                             "abs_tol_kT": policy.abs_tol,
                             "n_max": policy.n_max, "n_min": policy.n_min}

    method = cfg.choice(data.get("method", "one_reflection"), ["method"],
                        ("one_reflection", "exact"))
    resolved["method"] = method

    if threads is None:
        threads = cfg.integer(data.get("threads", 1), ["threads"], minimum=1)
    resolved["threads"] = int(threads)

    particles, particles_resolved = _parse_particles(cfg, data, ctx, final_task)
    if particles_resolved is not None:
        resolved["particles"] = particles_resolved

    grid = scan = asym = force_opts = None
    if final_task in ("map", "laplacian-map"):
        grid, resolved["grid"] = _parse_grid(cfg, data)
    if final_task == "scan-angle":
        scan, resolved["scan"] = _parse_scan(cfg, data)
    if final_task == "validate-asymptotics":
        asym, resolved["asymptotics"] = _parse_asymptotics(cfg, data)
    if final_task == "force":
        force_opts, resolved["force"] = _parse_force(cfg, data, particles)

    out = cfg.mapping(data.get("output", {}), ["output"])
    cfg.check_unknown(out, ["output"], {"formats", "matrix_txt"})
    formats = out.get("formats", ["csv", "json"])
    if not isinstance(formats, list) or not formats:
        cfg.fail(["output", "formats"], "'output.formats' must be a "
                                        "non-empty list")
    for i, fmt in enumerate(formats):
        cfg.choice(fmt, ["output", "formats", i], ("csv", "json"))
    matrix_txt = out.get("matrix_txt", False)
    if not isinstance(matrix_txt, bool):
        cfg.fail(["output", "matrix_txt"], "'output.matrix_txt' must be a bool")
    output = {"formats": list(formats), "matrix_txt": matrix_txt}
    resolved["output"] = dict(output)

    return ResolvedRun(task=final_task, ctx=ctx, policy=policy, method=method,
                       min_separation=min_sep, threads=int(threads),
                       particles=tuple(particles or ()), grid=grid, scan=scan,
                       asymptotics=asym, force_opts=force_opts, output=output,
                       resolved=resolved, source_path=path)


def _parse_particles(cfg, data, ctx, task):
    need = 2 if task in _PAIR_TASKS else 3 if task == "three-body" else 0
    raw = data.get("particles")
    if need == 0:
        if raw is not None:
            cfg.fail(["particles"], f"task '{task}' takes no particles")
        return (), None
    if raw is None:
        cfg.fail([], "missing required key 'particles'")
    if not isinstance(raw, list) or len(raw) != need:
        cfg.fail(["particles"],
                 f"task '{task}' needs exactly {need} particles")
    particles = []
    resolved = []
    for i, entry in enumerate(raw):
        base = ["particles", i]
        entry = cfg.mapping(entry, base)
        cfg.check_unknown(entry, base, {"position_m", "position_lambda_T",
                                        "material"})
        has_m = "position_m" in entry
        has_l = "position_lambda_T" in entry
        if has_m == has_l:
            cfg.fail(base, "give exactly one of position_m / "
                           "position_lambda_T")
        if has_m:
            pos = cfg.vector3(entry["position_m"], base + ["position_m"])
            pos_m = pos
            res_pos = {"position_m": pos}
        else:
            pos = cfg.vector3(entry["position_lambda_T"],
                              base + ["position_lambda_T"])
            pos_m = [v * ctx.lambda_T for v in pos]
            res_pos = {"position_lambda_T": pos}
        if "material" not in entry:
            cfg.fail(base, "missing 'material'")
        material, res_mat = _parse_material(cfg, entry["material"],
                                            base + ["material"])
        particles.append(ParticleSpec(pos_m, material))
        resolved.append({**res_pos, "material": res_mat})
    return particles, resolved


def _parse_material(cfg, node, base):
    node = cfg.mapping(node, base)
    kind = node.get("kind")
    if kind not in _MATERIAL_KEYS:
        cfg.fail(base + ["kind"], "material 'kind' must be 'toy' or "
                                  "'magneto_optical'")
    cfg.check_unknown(node, base, _MATERIAL_KEYS[kind])
    axis = node.get("axis", [1.0, 0.0, 0.0])
    axis = cfg.vector3(axis, base + ["axis"])
    try:
        if kind == "toy":
            if "alpha0_m3" not in node:
                cfg.fail(base, "toy material needs 'alpha0_m3'")
            model = ToyPolarizability(
                alpha0=cfg.number(node["alpha0_m3"], base + ["alpha0_m3"],
                                  positive=True),
                b=cfg.number(node.get("b", 0.0), base + ["b"]),
                axis=axis)
            res = {"kind": "toy", "alpha0_m3": model.alpha0, "b": model.b,
                   "axis": axis}
        else:
            for key in ("omega_p_rad_s", "omega_tau_rad_s", "omega_b_rad_s",
                        "radius_m"):
                if key not in node:
                    cfg.fail(base, f"magneto_optical material needs '{key}'")
            model = MagnetoOpticalModel(
                omega_p=cfg.number(node["omega_p_rad_s"],
                                   base + ["omega_p_rad_s"], minimum=0.0),
                omega_tau=cfg.number(node["omega_tau_rad_s"],
                                     base + ["omega_tau_rad_s"], minimum=0.0),
                omega_b=cfg.number(node["omega_b_rad_s"],
                                   base + ["omega_b_rad_s"]),
                radius=cfg.number(node["radius_m"], base + ["radius_m"],
                                  positive=True),
                axis=axis)
            res = {"kind": "magneto_optical", "omega_p_rad_s": model.omega_p,
                   "omega_tau_rad_s": model.omega_tau,
                   "omega_b_rad_s": model.omega_b, "radius_m": model.radius,
                   "axis": axis}
    except ValueError as err:
        cfg.fail(base, str(err))
    return model, res


def _parse_grid(cfg, data):
    if "grid" not in data:
        cfg.fail([], "missing required key 'grid'")
    node = cfg.mapping(data["grid"], ["grid"])
    cfg.check_unknown(node, ["grid"], {"axes", "range_lambda_T", "resolution",
                                       "offsets_lambda_T"})
    axes = node.get("axes", ["x", "y"])
    if not isinstance(axes, list) or len(axes) != 2:
        cfg.fail(["grid", "axes"], "'grid.axes' must be a 2-element list")
    for i, ax in enumerate(axes):
        cfg.choice(ax, ["grid", "axes", i], ("x", "y", "z"))
    if "range_lambda_T" not in node:
        cfg.fail(["grid"], "missing 'grid.range_lambda_T'")
    rng = node["range_lambda_T"]
    if isinstance(rng, list) and len(rng) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool)
            for v in rng):
        rng = [rng, rng]
    if not isinstance(rng, list) or len(rng) != 2:
        cfg.fail(["grid", "range_lambda_T"],
                 "'grid.range_lambda_T' must be [lo, hi] or [[lo, hi], [lo, hi]]")
    ranges = []
    for i, pair in enumerate(rng):
        if not isinstance(pair, list) or len(pair) != 2:
            cfg.fail(["grid", "range_lambda_T", i], "range must be [lo, hi]")
        lo = cfg.number(pair[0], ["grid", "range_lambda_T", i, 0])
        hi = cfg.number(pair[1], ["grid", "range_lambda_T", i, 1])
        if not hi > lo:
            cfg.fail(["grid", "range_lambda_T", i], "range needs hi > lo")
        ranges.append((lo, hi))
    if "resolution" not in node:
        cfg.fail(["grid"], "missing 'grid.resolution'")
    res = node["resolution"]
    if isinstance(res, int) and not isinstance(res, bool):
        res = [res, res]
    if not isinstance(res, list) or len(res) != 2:
        cfg.fail(["grid", "resolution"],
                 "'grid.resolution' must be an int or [n0, n1]")
    resolution = tuple(cfg.integer(v, ["grid", "resolution", i], minimum=2)
                       for i, v in enumerate(res))
    offsets = cfg.mapping(node.get("offsets_lambda_T", {}),
                          ["grid", "offsets_lambda_T"])
    off = {}
    for ax, val in offsets.items():
        cfg.choice(ax, ["grid", "offsets_lambda_T", ax], ("x", "y", "z"))
        if ax in axes:
            cfg.fail(["grid", "offsets_lambda_T", ax],
                     f"axis '{ax}' is swept, cannot also be offset")
        off[ax] = cfg.number(val, ["grid", "offsets_lambda_T", ax])
    try:
        grid = GridSpec(axes=tuple(axes), ranges=tuple(ranges),
                        resolution=resolution, offsets=off)
    except ValueError as err:
        cfg.fail(["grid"], str(err))
    resolved = {"axes": list(axes),
                "range_lambda_T": [list(r) for r in ranges],
                "resolution": list(resolution),
                "offsets_lambda_T": dict(off)}
    return grid, resolved


def _parse_scan(cfg, data):
    if "scan" not in data:
        cfg.fail([], "missing required key 'scan'")
    node = cfg.mapping(data["scan"], ["scan"])
    cfg.check_unknown(node, ["scan"], {"radius_lambda_T", "z_lambda_T",
                                       "samples"})
    if "radius_lambda_T" not in node:
        cfg.fail(["scan"], "missing 'scan.radius_lambda_T'")
    scan = {
        "radius_lambda": cfg.number(node["radius_lambda_T"],
                                    ["scan", "radius_lambda_T"],
                                    positive=True),
        "z_lambda": cfg.number(node.get("z_lambda_T", 0.0),
                               ["scan", "z_lambda_T"]),
        "samples": cfg.integer(node.get("samples", 256), ["scan", "samples"],
                               minimum=8),
    }
    resolved = {"radius_lambda_T": scan["radius_lambda"],
                "z_lambda_T": scan["z_lambda"], "samples": scan["samples"]}
    return scan, resolved


def _parse_asymptotics(cfg, data):
    if "asymptotics" not in data:
        cfg.fail([], "missing required key 'asymptotics'")
    node = cfg.mapping(data["asymptotics"], ["asymptotics"])
    cfg.check_unknown(node, ["asymptotics"],
                      {"d_lambda_T", "theta_rad", "phi_rad", "b_pairs",
                       "alpha0_m3", "regime"})
    for key in ("d_lambda_T", "b_pairs", "alpha0_m3"):
        if key not in node:
            cfg.fail(["asymptotics"], f"missing 'asymptotics.{key}'")

    def number_list(key, default=None):
        raw = node.get(key, default)
        if not isinstance(raw, list) or not raw:
            cfg.fail(["asymptotics", key],
                     f"'asymptotics.{key}' must be a non-empty list")
        return [cfg.number(v, ["asymptotics", key, i])
                for i, v in enumerate(raw)]

    distances = number_list("d_lambda_T")
    for i, d in enumerate(distances):
        if not d > 0:
            cfg.fail(["asymptotics", "d_lambda_T", i], "distances must be > 0")
    thetas = number_list("theta_rad", [math.pi / 2.0])
    phis = number_list("phi_rad", [0.0])
    pairs_raw = node["b_pairs"]
    if not isinstance(pairs_raw, list) or not pairs_raw:
        cfg.fail(["asymptotics", "b_pairs"], "'b_pairs' must be a non-empty "
                                             "list of [b1, b2]")
    b_pairs = []
    for i, pair in enumerate(pairs_raw):
        if not isinstance(pair, list) or len(pair) != 2:
            cfg.fail(["asymptotics", "b_pairs", i], "each b_pair is [b1, b2]")
        b_pairs.append((cfg.number(pair[0], ["asymptotics", "b_pairs", i, 0]),
                        cfg.number(pair[1], ["asymptotics", "b_pairs", i, 1])))
    asym = {
        "d_lambda": distances,
        "theta": thetas,
        "phi": phis,
        "b_pairs": b_pairs,
        "alpha0": cfg.number(node["alpha0_m3"], ["asymptotics", "alpha0_m3"],
                             positive=True),
        "regime": cfg.choice(node.get("regime", "auto"),
                             ["asymptotics", "regime"],
                             ("auto", "long", "short")),
    }
    resolved = {"d_lambda_T": distances, "theta_rad": thetas,
                "phi_rad": phis, "b_pairs": [list(p) for p in b_pairs],
                "alpha0_m3": asym["alpha0"], "regime": asym["regime"]}
    return asym, resolved


def _parse_force(cfg, data, particles):
    node = cfg.mapping(data.get("force", {}), ["force"])
    cfg.check_unknown(node, ["force"], {"target", "method"})
    target = cfg.integer(node.get("target", 0), ["force", "target"], minimum=0)
    if particles and target >= len(particles):
        cfg.fail(["force", "target"],
                 f"force.target {target} out of range")
    method = cfg.choice(node.get("method", "checked"), ["force", "method"],
                        ("checked", "analytic", "finite_difference"))
    opts = {"target": target, "method": method}
    return opts, dict(opts)
