"""Command-line front end.

Every command writes one table, as CSV (a ``# meta`` JSON comment line, a
header line, then rows; floats with 17 significant digits) or as JSON
(``{"meta": ..., "rows": [...]}``). The meta block echoes the fully resolved
parameters and the package version, and nothing time- or host-dependent, so
repeated invocations are byte-identical.

Parameter precedence: command-line flags > ``--config`` file > defaults.
Exit codes: 0 success, 1 failed verification or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__, dilation, metrology, noisemc, signal, verify
from .errors import InsufficientStatisticsError, InvalidArgument, PHSenseError
from .presets import PRESETS, get_preset

DIP_OFFSETS = (0.072, 0.172, 0.272, 0.372, 0.472, 0.572, 0.672)

DEFAULTS: dict[str, Any] = {
    "omega": 1.0,
    "epsilon": 0.01,
    "kappa": None,
    "lambda": None,
    "lambda_grid": None,
    "t_grid": "0:20:401",
    "seed": None,
    "format": "csv",
    "out": None,
    "preset": None,
    "epsilon_list": None,
    "N": "1e6",
    "R": 200,
    "m0": 100.0,
    "m1": 0.0,
    "sigma": 10.0,
    "xi": 1.0,
    "correlation": "fully_correlated",
    "protocol": "both",
    "method": "aggregate",
    "workers": 1,
    "sweep": False,
    "sweep_points": 201,
}

COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "peak": {"epsilon_list": "1e-2,3e-3,1e-3"},
    "susceptibility": {"epsilon_list": "1e-2,1e-3,1e-4"},
    "montecarlo": {"N": "1e7"},
    "verify": {"epsilon_list": "0.1,0.01"},
}


_MODEL_KEYS = ("omega", "epsilon", "epsilon_list", "kappa", "preset", "format")

# Parameters echoed into each command's meta block. Worker count and output
# path are left out so they cannot change the bytes written.
ECHOED_KEYS: dict[str, tuple[str, ...]] = {
    "signal": ("omega", "epsilon", "kappa", "preset", "format", "lambda", "lambda_grid", "t_grid", "lambda_values"),
    "peak": _MODEL_KEYS,
    "susceptibility": _MODEL_KEYS + ("sweep", "sweep_points"),
    "fisher": _MODEL_KEYS + ("lambda", "N"),
    "montecarlo": _MODEL_KEYS + ("N", "R", "seed", "m0", "m1", "sigma", "xi", "correlation", "protocol", "method"),
    "verify": ("omega", "epsilon", "epsilon_list", "kappa", "format", "corrupt_c"),
}


class UsageError(Exception):
    pass


# -- parsing helpers -----------------------------------------------------------


def _float(text, name: str) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise UsageError(f"{name}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise UsageError(f"{name}: value must be finite, got {text!r}")
    return value


def parse_list(text, name: str) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [_float(v, name) for v in text]
    items = [s for s in str(text).replace(";", ",").split(",") if s.strip()]
    if not items:
        raise UsageError(f"{name}: empty list")
    return [_float(s.strip(), name) for s in items]


def parse_grid(text, name: str) -> np.ndarray:
    """``start:stop:num`` -> ``num`` evenly spaced points, endpoints included."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise UsageError(f"{name}: expected start:stop:num, got {text!r}")
    start, stop = _float(parts[0], name), _float(parts[1], name)
    try:
        num = int(parts[2])
    except ValueError:
        raise UsageError(f"{name}: num must be an integer, got {parts[2]!r}") from None
    if num < 1:
        raise UsageError(f"{name}: num must be >= 1")
    return np.linspace(start, stop, num)


def read_config_file(path: str) -> dict[str, str]:
    """UTF-8 ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def resolve(command: str, args: argparse.Namespace) -> dict[str, Any]:
    params = dict(DEFAULTS)
    params.update(COMMAND_DEFAULTS.get(command, {}))
    if args.config:
        params.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            params[key] = value
    if isinstance(params["sweep"], str):
        params["sweep"] = params["sweep"].lower() in ("1", "true", "yes", "on")
    return params


def _epsilons(p) -> list[float]:
    if p.get("epsilon_list") is not None:
        return parse_list(p["epsilon_list"], "--epsilon-list")
    return [_float(p["epsilon"], "--epsilon")]


def _config(p, eps: float) -> dilation.SensorConfig:
    kappa = None if p["kappa"] in (None, "", "None") else _float(p["kappa"], "--kappa")
    return dilation.derive_config(_float(p["omega"], "--omega"), eps, kappa)


def _counts(text, name: str) -> list[int]:
    values = parse_list(text, name)
    out = []
    for v in values:
        if v < 1 or v != int(v):
            raise UsageError(f"{name}: run counts must be positive integers, got {v!r}")
        out.append(int(v))
    return out


def _serializable_params(p: dict[str, Any]) -> dict[str, Any]:
    out = {}
    for k, v in p.items():
        if isinstance(v, np.ndarray):
            v = v.tolist()
        out[k] = v
    return out


# -- output --------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def render(meta: dict, columns: Sequence[str], rows: Sequence[dict], fmt: str) -> str:
    if fmt == "json":
        doc = {"meta": meta, "rows": [{c: row.get(c) for c in columns} for row in rows]}
        return json.dumps(_json_value(doc), indent=2) + "\n"
    buf = io.StringIO()
    buf.write("# meta " + json.dumps(_json_value(meta), separators=(",", ":")) + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(row.get(c)) for c in columns) + "\n")
    return buf.getvalue()


def _meta(command: str, p: dict, configs: Sequence[dilation.SensorConfig], extra: dict | None = None) -> dict:
    meta = {
        "tool": "phsense",
        "version": __version__,
        "command": command,
        "params": _serializable_params({k: p.get(k) for k in ECHOED_KEYS[command]}),
        "derived": [cfg.as_dict() for cfg in configs],
    }
    if p.get("preset"):
        preset = get_preset(p["preset"])
        meta["units"] = [preset.describe(cfg) for cfg in configs]
    if extra:
        meta.update(extra)
    return meta


def _add_units(p, cfg, row: dict, times=(), fields=()) -> None:
    if not p.get("preset"):
        return
    preset = get_preset(p["preset"])
    for name in times:
        row[name + "_s"] = preset.to_seconds(cfg, row[name])
    for name in fields:
        row[name + "_hz"] = preset.to_hz(cfg, row[name])


def _unit_columns(p, columns: list[str], times=(), fields=()) -> list[str]:
    if not p.get("preset"):
        return columns
    return columns + [t + "_s" for t in times] + [f + "_hz" for f in fields]


# -- commands ------------------------------------------------------------------

Table = tuple[dict, list[str], list[dict], int]


def cmd_signal(p: dict) -> Table:
    cfg = _config(p, _float(p["epsilon"], "--epsilon"))
    scale = cfg.lambda_scale
    if p["lambda"] is not None:
        lambdas = parse_list(p["lambda"], "--lambda")
    elif p["lambda_grid"] is not None:
        lambdas = list(parse_grid(p["lambda_grid"], "--lambda-grid"))
    else:
        lambdas = [0.0] + [(x - 2.0) * scale for x in DIP_OFFSETS]
    times = parse_grid(p["t_grid"], "--t-grid")

    columns = ["lambda", "lambda_over_eps_omega", "t", "omega_t", "S_exact", "S_simulated", "gamma", "phi"]
    rows = []
    for lam in lambdas:
        s_exact = signal.population(cfg, lam, times)
        s_sim, _ = signal.simulated_curve(cfg, lam, times)
        g = signal.gamma(cfg, lam, times)
        e_l = dilation.effective_spec(cfg, lam).E_lambda
        for k, t in enumerate(times):
            row = {
                "lambda": float(lam),
                "lambda_over_eps_omega": float(lam) / scale,
                "t": float(t),
                "omega_t": cfg.omega * float(t),
                "S_exact": float(s_exact[k]),
                "S_simulated": float(s_sim[k]),
                "gamma": float(g[k]),
                "phi": e_l * float(t),
            }
            _add_units(p, cfg, row, times=("t",), fields=("lambda",))
            rows.append(row)
    p = dict(p, lambda_values=[float(v) for v in lambdas])
    return _meta("signal", p, [cfg]), _unit_columns(p, columns, ("t",), ("lambda",)), rows, 0


def cmd_peak(p: dict) -> Table:
    columns = ["epsilon", "tau", "lambda_m", "delta_lambda_plus", "delta_lambda_minus", "delta_lambda",
               "ratio_to_3pi_eps32"]
    rows, configs = [], []
    for eps in _epsilons(p):
        cfg = _config(p, eps)
        configs.append(cfg)
        w = signal.peak_width(cfg)
        row = {
            "epsilon": eps,
            "tau": cfg.tau,
            "lambda_m": w.lambda_m,
            "delta_lambda_plus": w.delta_lambda_plus,
            "delta_lambda_minus": w.delta_lambda_minus,
            "delta_lambda": w.delta_lambda,
            "ratio_to_3pi_eps32": w.delta_lambda / (3.0 * math.pi * eps ** 1.5 * cfg.omega),
        }
        _add_units(p, cfg, row, times=("tau",), fields=("delta_lambda",))
        rows.append(row)
    return _meta("peak", p, configs), _unit_columns(p, columns, ("tau",), ("delta_lambda",)), rows, 0


def cmd_susceptibility(p: dict) -> Table:
    rows, configs = [], []
    if p["sweep"]:
        columns = ["epsilon", "lambda", "lambda_over_eps_omega", "S", "chi"]
    else:
        columns = ["epsilon", "tau", "lambda_o", "lambda_o_over_eps_omega", "chi_max", "chi_max_scaled",
                   "working_point_ratio"]
    for eps in _epsilons(p):
        cfg = _config(p, eps)
        configs.append(cfg)
        if p["sweep"]:
            w = signal.peak_width(cfg)
            n = int(p["sweep_points"])
            lam = w.lambda_m + np.linspace(-3.0, 3.0, n) * w.delta_lambda
            S = signal.population(cfg, lam)
            x = signal.chi(cfg, lam)
            for k in range(n):
                rows.append({
                    "epsilon": eps, "lambda": float(lam[k]), "lambda_over_eps_omega": float(lam[k]) / cfg.lambda_scale,
                    "S": float(S[k]), "chi": float(x[k]),
                })
            continue
        o = signal.optimal_working_point(cfg)
        row = {
            "epsilon": eps,
            "tau": cfg.tau,
            "lambda_o": o.lambda_o,
            "lambda_o_over_eps_omega": o.lambda_o / cfg.lambda_scale,
            "chi_max": o.chi_max,
            "chi_max_scaled": o.chi_max * eps ** 1.5 * cfg.omega,
            "working_point_ratio": (o.lambda_o / cfg.omega + 2.0 * eps) / eps ** 1.5,
        }
        _add_units(p, cfg, row, times=("tau",), fields=("lambda_o",))
        rows.append(row)
    if not p["sweep"]:
        columns = _unit_columns(p, columns, ("tau",), ("lambda_o",))
    return _meta("susceptibility", p, configs), columns, rows, 0


def cmd_fisher(p: dict) -> Table:
    columns = ["epsilon", "lambda", "N", "S", "gamma", "chi", "I", "K", "I_over_K", "I_over_N_inv_eps"]
    rows, configs = [], []
    for eps in _epsilons(p):
        cfg = _config(p, eps)
        configs.append(cfg)
        if p["lambda"] is not None:
            lambdas = parse_list(p["lambda"], "--lambda")
        else:
            lambdas = [signal.optimal_working_point(cfg).lambda_o]
        for n in _counts(p["N"], "--N"):
            for lam in lambdas:
                f = metrology.fisher_info(cfg, lam, n)
                rows.append({
                    "epsilon": eps, "lambda": lam, "N": n, "S": f.S, "gamma": f.gamma, "chi": f.chi,
                    "I": f.I, "K": f.K, "I_over_K": f.ratio, "I_over_N_inv_eps": f.I * eps * cfg.omega ** 2 / n,
                })
    return _meta("fisher", p, configs), columns, rows, 0


MC_COLUMNS = ["epsilon", "protocol", "lambda", "N", "R", "seed", "signal", "keep_probability", "S_hat_mean",
              "S_hat_var", "predicted_var", "delta_lambda_min", "ratio", "flag"]


def _mc_row(eps, protocol, lam, n, R, seed, p_keep, p0) -> dict:
    return {"epsilon": eps, "protocol": protocol, "lambda": lam, "N": n, "R": R, "seed": seed,
            "signal": p0, "keep_probability": p_keep, "S_hat_mean": math.nan, "S_hat_var": math.nan,
            "predicted_var": math.nan, "delta_lambda_min": math.nan, "ratio": math.nan, "flag": "ok"}


def cmd_montecarlo(p: dict) -> Table:
    if p["seed"] is None:
        raise UsageError("montecarlo requires --seed")
    try:
        seed = int(p["seed"])
    except ValueError:
        raise UsageError(f"--seed: expected an integer, got {p['seed']!r}") from None
    R = int(_float(p["R"], "--R"))
    readout = noisemc.ReadoutModel(
        m0=_float(p["m0"], "--m0"), m1=_float(p["m1"], "--m1"), sigma=_float(p["sigma"], "--sigma"),
        xi=_float(p["xi"], "--xi"), correlation=p["correlation"],
    )
    protocols = ["pseudo_hermitian", "ramsey"] if p["protocol"] == "both" else [p["protocol"]]
    workers = int(p["workers"])
    rows, configs = [], []
    for eps in _epsilons(p):
        cfg = _config(p, eps)
        configs.append(cfg)
        peak = signal.optimal_working_point(cfg)
        points = {"pseudo_hermitian": (peak.lambda_o, peak.chi_max),
                  "ramsey": (metrology.ramsey_working_point(cfg.tau), cfg.tau)}
        for n in _counts(p["N"], "--N"):
            group = []
            for proto in protocols:
                lam, slope = points[proto]
                p_keep, p0 = noisemc.protocol_probabilities(cfg, lam, proto)
                row = _mc_row(eps, proto, lam, n, R, seed, p_keep, p0)
                try:
                    res = noisemc.simulate_campaign(
                        cfg, lam, readout, noisemc.Campaign(n, R, seed, proto), p["method"], workers)
                except InsufficientStatisticsError as exc:
                    row["flag"] = f"insufficient_statistics(repetition={exc.repetition})"
                else:
                    row.update(S_hat_mean=res.S_hat_mean, S_hat_var=res.S_hat_var,
                               predicted_var=res.predicted_var, delta_lambda_min=res.S_hat_std / slope)
                group.append(row)
            if len(group) == 2 and all(r["flag"] == "ok" for r in group):
                ratio = group[0]["delta_lambda_min"] / group[1]["delta_lambda_min"]
                for r in group:
                    r["ratio"] = ratio
            rows.extend(group)
    return _meta("montecarlo", p, configs), MC_COLUMNS, rows, 0


def cmd_verify(p: dict) -> Table:
    corrupt = p.get("corrupt_c")
    results = verify.run_suite(
        omega=_float(p["omega"], "--omega"),
        epsilons=_epsilons(p),
        kappa=None if p["kappa"] is None else _float(p["kappa"], "--kappa"),
        corrupt_c=corrupt,
    )
    columns = ["check", "epsilon", "value", "tolerance", "status"]
    rows = [{"check": r.name, "epsilon": r.epsilon, "value": r.value, "tolerance": r.tolerance,
             "status": "PASS" if r.passed else "FAIL"} for r in results]
    configs = [_config(p, eps) for eps in _epsilons(p)]
    ok = all(r.passed for r in results)
    return _meta("verify", p, configs, {"all_passed": ok}), columns, rows, 0 if ok else 1


COMMANDS: dict[str, tuple[Callable[[dict], Table], str]] = {
    "signal": (cmd_signal, "S(lambda, t) on a time grid, exact and simulated (dip structure)"),
    "peak": (cmd_peak, "half-maximum widths of the coalescence peak per epsilon"),
    "susceptibility": (cmd_susceptibility, "optimal working point and maximum susceptibility per epsilon"),
    "fisher": (cmd_fisher, "Fisher information of the kept runs against the dilated-system bound"),
    "montecarlo": (cmd_montecarlo, "readout-noise Monte Carlo for the sensor and Ramsey protocols"),
    "verify": (cmd_verify, "numerical checks of the dilation; exit 1 on any failure"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--omega", type=str, help="frequency scale omega (default 1)")
    g.add_argument("--epsilon", type=str, help="coalescence parameter epsilon (default 0.01)")
    g.add_argument("--epsilon-list", dest="epsilon_list", type=str, help="comma-separated epsilon values")
    g.add_argument("--kappa", type=str, help="initial-condition parameter (default delta)")
    g.add_argument("--lambda", dest="lambda", type=str, help="comma-separated field values")
    g.add_argument("--lambda-grid", dest="lambda_grid", type=str, help="field grid start:stop:num")
    g.add_argument("--t-grid", dest="t_grid", type=str, help="time grid start:stop:num")
    g.add_argument("--seed", type=str, help="Monte Carlo seed (64-bit unsigned)")
    g.add_argument("--preset", choices=sorted(PRESETS), help="add laboratory-unit columns")
    o = common.add_argument_group("output")
    o.add_argument("--format", choices=("csv", "json"))
    o.add_argument("--out", type=str, help="output path (default stdout)")
    o.add_argument("--config", type=str, help="key = value parameter file")

    parser = argparse.ArgumentParser(prog="phsense", description="Pseudo-Hermitian qubit sensing toolkit")
    parser.add_argument("--version", action="version", version=f"phsense {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in ("fisher", "montecarlo"):
            sp.add_argument("--N", dest="N", type=str, help="comma-separated run counts")
        if name == "susceptibility":
            sp.add_argument("--sweep", action="store_true", help="emit chi(lambda) across the peak instead")
            sp.add_argument("--sweep-points", dest="sweep_points", type=str)
        if name == "montecarlo":
            sp.add_argument("--R", dest="R", type=str, help="campaign repetitions (default 200)")
            sp.add_argument("--m0", type=str)
            sp.add_argument("--m1", type=str)
            sp.add_argument("--sigma", type=str)
            sp.add_argument("--xi", type=str)
            sp.add_argument("--correlation", choices=[c.value for c in noisemc.Correlation])
            sp.add_argument("--protocol", choices=("pseudo_hermitian", "ramsey", "both"))
            sp.add_argument("--method", choices=("aggregate", "per_run"))
            sp.add_argument("--workers", type=str, help="thread count; output does not depend on it")
        if name == "verify":
            sp.add_argument("--corrupt-c", dest="corrupt_c", type=float, help=argparse.SUPPRESS)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler, _ = COMMANDS[args.command]
    try:
        params = resolve(args.command, args)
        params["corrupt_c"] = getattr(args, "corrupt_c", None)
        if args.command != "verify":
            params.pop("corrupt_c")
        meta, columns, rows, code = handler(params)
        text = render(meta, columns, rows, params["format"])
    except UsageError as exc:
        parser.exit(2, f"phsense {args.command}: error: {exc}\n")
    except InvalidArgument as exc:
        parser.exit(2, f"phsense {args.command}: error: {exc}\n")
    except PHSenseError as exc:
        parser.exit(1, f"phsense {args.command}: error: {exc}\n")

    if params["out"]:
        Path(params["out"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
