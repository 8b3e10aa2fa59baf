"""Batch command line front end.

Subcommands: train (fit on all data), evaluate (fit on a split, report train
and validation RMSE), sweep-rank (validation curve over ranks), blend
(stacked ensemble), predict (fit on all data, write a submission). Options
resolve in precedence order: built-in defaults, then the --config file, then
CFKIT_* environment variables, then explicit flags.

The metrics CSV schema is fixed: model,rank,seed,train_rmse,val_rmse,seconds.
RMSE cells use full-precision repr so reruns with the same seeds are
byte-identical; --no-timing additionally pins the seconds cell to 0.000.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .blending import blend_base_predictions, blend_predict, fit_blender, write_blend_csv
from .data import (
    PredictionSet,
    load_ratings,
    read_query_pairs,
    rmse_values,
    split_ratings,
    write_submission,
)
from .errors import CfkitError, ConfigError
from .factorization import FactorModel, save_factor_model
from .presets import canonical_name, is_blend_preset, resolve_blend, resolve_preset

METRICS_HEADER = "model,rank,seed,train_rmse,val_rmse,seconds"

_SWEEP_MODELS = ("svd", "als", "funksvd", "bfm-r-ui")

# option name -> (value type, default); "lambda" is stored under dest lambda_
_OPTIONS = {
    "data": (str, None),
    "preset": (str, None),
    "seed": (int, 0),
    "split": (float, 0.8),
    "n_users": (int, None),
    "n_items": (int, None),
    "queries": (str, None),
    "out_metrics": (str, None),
    "out_submission": (str, None),
    "out_model": (str, None),
    "out_blend_data": (str, None),
    "no_timing": (bool, False),
    "rank": (int, None),
    "iters": (int, None),
    "eta": (float, None),
    "lambda": (float, None),
    "alpha": (float, None),
    "sigma": (int, None),
    "max_iter": (int, None),
    "epsilon": (float, None),
    "k": (int, None),
    "model_seed": (int, None),
    "ranks": (str, None),
    "models": (str, None),
    "bfm_iters": (int, None),
    "method": (str, None),
    "blend_fraction": (float, 0.8),
    "refit_full": (bool, False),
}

_MODEL_OVERRIDES = ("rank", "iters", "eta", "lambda", "alpha", "sigma",
                    "max_iter", "epsilon", "k", "model_seed")
_COMMON = ("data", "preset", "seed", "split", "n_users", "n_items", "queries",
           "out_metrics", "out_submission", "no_timing")

_SUBCOMMAND_OPTIONS = {
    "train": _COMMON + _MODEL_OVERRIDES + ("out_model",),
    "evaluate": _COMMON + _MODEL_OVERRIDES,
    "predict": _COMMON + _MODEL_OVERRIDES + ("method", "models", "blend_fraction",
                                             "refit_full", "out_blend_data"),
    "sweep-rank": _COMMON + ("ranks", "models", "bfm_iters"),
    "blend": _COMMON + ("method", "alpha", "models", "blend_fraction",
                        "refit_full", "out_blend_data"),
}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _coerce(key: str, raw: str):
    typ = _OPTIONS[key][0]
    if typ is bool:
        return _parse_bool(raw)
    try:
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from exc


def parse_config_file(path) -> dict[str, str]:
    """Flat `key = value` lines; # starts a comment; unknown keys rejected."""
    values: dict[str, str] = {}
    try:
        with open(path) as fh:
            for n, line in enumerate(fh, start=1):
                text = line.split("#", 1)[0].strip()
                if not text:
                    continue
                if "=" not in text:
                    raise ConfigError(f"{path}: line {n}: expected key = value, got {text!r}")
                key, raw = text.split("=", 1)
                key = key.strip().replace("-", "_")
                if key not in _OPTIONS:
                    raise ConfigError(f"{path}: line {n}: unknown key {key!r}")
                values[key] = raw.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    return values


class _Options:
    """Resolved option values for one subcommand invocation."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        config_values = parse_config_file(args.config) if args.config else {}
        self.set_overrides = _parse_set_list(getattr(args, "set", None) or [])
        for key in _SUBCOMMAND_OPTIONS[command]:
            value = _OPTIONS[key][1]
            if key in config_values:
                value = _coerce(key, config_values[key])
            env = os.environ.get("CFKIT_" + key.upper())
            if env is not None:
                value = _coerce(key, env)
            flag = getattr(args, "lambda_" if key == "lambda" else key)
            if flag is not None:
                value = flag
            setattr(self, "lambda_" if key == "lambda" else key, value)


def _parse_set_list(pairs) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        out[key.strip()] = _parse_scalar(raw.strip())
    return out


def _parse_scalar(raw: str):
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    for typ in (int, float):
        try:
            return typ(raw)
        except ValueError:
            pass
    return raw


def _load_matrix(o: _Options):
    if not o.data:
        raise ConfigError("a --data file is required")
    if not os.path.exists(o.data):
        raise ConfigError(f"data file not found: {o.data}")
    return load_ratings(o.data, n_users=o.n_users, n_items=o.n_items)


def _load_queries(o: _Options):
    if not o.queries:
        return None
    if not os.path.exists(o.queries):
        raise ConfigError(f"queries file not found: {o.queries}")
    return read_query_pairs(o.queries)


def _check_output_path(path):
    if path:
        parent = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(parent):
            raise ConfigError(f"output directory does not exist: {parent}")


def _apply_named_overrides(estimator, name: str, o: _Options) -> None:
    params = estimator.get_params()
    if "seed" in params:
        estimator.set_params(seed=o.seed if o.model_seed is None else o.model_seed)
    candidates = {
        "rank": ("rank",),
        "iters": ("n_iter", "n_epochs", "max_iter"),
        "eta": ("eta",),
        "alpha": ("alpha",),
        "sigma": ("sigma",),
        "max_iter": ("max_iter",),
        "epsilon": ("epsilon",),
        "k": ("k",),
    }
    for opt, targets in candidates.items():
        value = getattr(o, opt, None)
        if value is None:
            continue
        hit = next((t for t in targets if t in params), None)
        if hit is None:
            raise ConfigError(f"preset {name!r} does not accept --{opt.replace('_', '-')}")
        estimator.set_params(**{hit: value})
    lam = getattr(o, "lambda_", None)
    if lam is not None:
        if "lam" in params:
            estimator.set_params(lam=lam)
        elif "alpha" in params and "beta" in params:
            estimator.set_params(alpha=lam, beta=lam)
        else:
            raise ConfigError(f"preset {name!r} does not accept --lambda")
    if o.set_overrides:
        bad = sorted(set(o.set_overrides) - set(params))
        if bad:
            raise ConfigError(f"preset {name!r} does not accept overrides {bad}")
        estimator.set_params(**o.set_overrides)


def _build_model(o: _Options):
    if not o.preset:
        raise ConfigError("a --preset is required")
    if is_blend_preset(o.preset):
        raise ConfigError(f"preset {o.preset!r} is a blend; use the blend subcommand")
    name = canonical_name(o.preset)
    estimator = resolve_preset(name)
    _apply_named_overrides(estimator, name, o)
    rank = estimator.get_params().get("rank", 0)
    return estimator, name, int(rank or 0)


def _metrics_row(model, rank, seed, train_rmse, val_rmse, seconds, no_timing) -> str:
    def fmt(x):
        return "" if x is None else repr(float(x))

    sec = "0.000" if no_timing else f"{seconds:.3f}"
    return f"{model},{rank},{seed},{fmt(train_rmse)},{fmt(val_rmse)},{sec}"


def _emit_metrics(rows: list[str], path) -> None:
    text = METRICS_HEADER + "\n" + "".join(row + "\n" for row in rows)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_query_submission(o: _Options, queries, values) -> None:
    if o.out_submission and queries is not None:
        q_users, q_items = queries
        write_submission(PredictionSet(q_users, q_items, np.asarray(values)), o.out_submission)


def cmd_train(o: _Options) -> int:
    for path in (o.out_metrics, o.out_submission, o.out_model):
        _check_output_path(path)
    m = _load_matrix(o)
    queries = _load_queries(o)
    estimator, name, rank = _build_model(o)

    start = time.perf_counter()
    estimator.fit(m)
    users, items = m.users, m.items
    if queries is not None:
        users = np.concatenate([users, queries[0]])
        items = np.concatenate([items, queries[1]])
    pred = estimator.predict((users, items))
    seconds = time.perf_counter() - start

    train_rmse = rmse_values(pred[: m.n_entries], m.values)
    _write_query_submission(o, queries, pred[m.n_entries:])
    if o.out_model:
        model = getattr(estimator, "model_", None)
        if not isinstance(model, FactorModel):
            raise ConfigError(f"--out-model requires a factorization preset, not {name!r}")
        save_factor_model(model, o.out_model)
    _emit_metrics([_metrics_row(name, rank, o.seed, train_rmse, None, seconds, o.no_timing)],
                  o.out_metrics)
    return 0


def cmd_evaluate(o: _Options) -> int:
    for path in (o.out_metrics, o.out_submission):
        _check_output_path(path)
    m = _load_matrix(o)
    queries = _load_queries(o)
    split = split_ratings(m, o.split, o.seed)
    train, val = split.train, split.validation
    estimator, name, rank = _build_model(o)

    start = time.perf_counter()
    estimator.fit(train)
    users = np.concatenate([train.users, val.users] + ([queries[0]] if queries else []))
    items = np.concatenate([train.items, val.items] + ([queries[1]] if queries else []))
    pred = estimator.predict((users, items))
    seconds = time.perf_counter() - start

    n_tr, n_val = train.n_entries, val.n_entries
    train_rmse = rmse_values(pred[:n_tr], train.values)
    val_rmse = rmse_values(pred[n_tr:n_tr + n_val], val.values) if n_val else None
    _write_query_submission(o, queries, pred[n_tr + n_val:])
    _emit_metrics([_metrics_row(name, rank, o.seed, train_rmse, val_rmse, seconds, o.no_timing)],
                  o.out_metrics)
    return 0


def _parse_int_list(text, what: str) -> list[int]:
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{what} must be a non-empty comma-separated list")
    try:
        values = [int(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"{what} must be integers, got {text!r}") from exc
    if any(v < 1 for v in values):
        raise ConfigError(f"{what} must be positive, got {text!r}")
    return values


def cmd_sweep_rank(o: _Options) -> int:
    for path in (o.out_metrics, o.out_submission):
        _check_output_path(path)
    if o.ranks is None:
        raise ConfigError("sweep-rank requires --ranks")
    ranks = _parse_int_list(o.ranks, "ranks")
    names = [canonical_name(p.strip()) for p in o.models.split(",") if p.strip()] \
        if o.models else list(_SWEEP_MODELS)
    if not names:
        raise ConfigError("models must be a non-empty comma-separated list")

    m = _load_matrix(o)
    split = split_ratings(m, o.split, o.seed)
    train, val = split.train, split.validation
    if val.n_entries == 0:
        raise ConfigError("sweep-rank needs a validation part; use --split < 1")
    users = np.concatenate([train.users, val.users])
    items = np.concatenate([train.items, val.items])

    rows = []
    for name in names:
        for rank in ranks:
            estimator = resolve_preset(name)
            params = estimator.get_params()
            if "rank" not in params:
                raise ConfigError(f"preset {name!r} has no rank to sweep")
            if "seed" in params:
                estimator.set_params(seed=o.seed)
            if o.bfm_iters is not None and "n_iter" in params and name.startswith("bfm"):
                estimator.set_params(n_iter=o.bfm_iters)
            estimator.set_params(rank=rank)

            start = time.perf_counter()
            estimator.fit(train)
            pred = estimator.predict((users, items))
            seconds = time.perf_counter() - start
            rows.append(_metrics_row(
                name, rank, o.seed,
                rmse_values(pred[: train.n_entries], train.values),
                rmse_values(pred[train.n_entries:], val.values),
                seconds, o.no_timing,
            ))
    _emit_metrics(rows, o.out_metrics)
    return 0


def _resolve_blend_setup(o: _Options):
    method, alpha, bases = "ols", 0.0, None
    name = None
    if o.preset:
        if not is_blend_preset(o.preset):
            raise ConfigError(f"preset {o.preset!r} is not a blend preset")
        preset, bases = resolve_blend(o.preset)
        name, method, alpha = preset.name, preset.method, preset.alpha
    if o.models:
        base_names = [canonical_name(p.strip()) for p in o.models.split(",") if p.strip()]
        if not base_names:
            raise ConfigError("models must be a non-empty comma-separated list")
        bases = [(b, resolve_preset(b)) for b in base_names]
    if bases is None:
        raise ConfigError("blend requires --preset or --models")
    if o.method is not None:
        method = o.method
    if o.alpha is not None:
        alpha = o.alpha
    applied = set()
    for _, estimator in bases:
        params = estimator.get_params()
        if "seed" in params:
            estimator.set_params(seed=o.seed)
        hits = {k: v for k, v in o.set_overrides.items() if k in params}
        if hits:
            estimator.set_params(**hits)
            applied.update(hits)
    unused = sorted(set(o.set_overrides) - applied)
    if unused:
        raise ConfigError(f"no blend base accepts overrides {unused}")
    return name or f"blend-{method}", method, alpha, bases


def _run_blend(o: _Options, with_validation: bool) -> int:
    for path in (o.out_metrics, o.out_submission, o.out_blend_data):
        _check_output_path(path)
    name, method, alpha, bases = _resolve_blend_setup(o)
    m = _load_matrix(o)
    queries = _load_queries(o)

    if with_validation:
        split = split_ratings(m, o.split, o.seed)
        train, val = split.train, split.validation
    else:
        train, val = m, None
    n_val = val.n_entries if val is not None else 0
    inner_users = [val.users] if n_val else []
    inner_items = [val.items] if n_val else []
    if queries is not None:
        inner_users.append(queries[0])
        inner_items.append(queries[1])
    inner = (np.concatenate(inner_users), np.concatenate(inner_items)) if inner_users else None

    start = time.perf_counter()
    dataset, features = blend_base_predictions(
        train, bases, fraction=o.blend_fraction, seed=o.seed,
        queries=inner, refit_full=o.refit_full,
    )
    blender = fit_blender(dataset, method, alpha)
    train_rmse = rmse_values(blend_predict(blender, dataset.features), dataset.targets)
    val_rmse = None
    if n_val:
        val_rmse = rmse_values(blend_predict(blender, features[:n_val]), val.values)
    seconds = time.perf_counter() - start

    if queries is not None:
        _write_query_submission(o, queries, blend_predict(blender, features[n_val:]))
    if o.out_blend_data:
        write_blend_csv(dataset, o.out_blend_data)
    _emit_metrics([_metrics_row(name, 0, o.seed, train_rmse, val_rmse, seconds, o.no_timing)],
                  o.out_metrics)
    return 0


def cmd_blend(o: _Options) -> int:
    return _run_blend(o, with_validation=True)


def cmd_predict(o: _Options) -> int:
    if not o.queries:
        raise ConfigError("predict requires --queries")
    if not o.out_submission:
        raise ConfigError("predict requires --out-submission")
    if o.preset and is_blend_preset(o.preset) or o.models:
        return _run_blend(o, with_validation=False)

    for path in (o.out_metrics, o.out_submission):
        _check_output_path(path)
    m = _load_matrix(o)
    queries = _load_queries(o)
    estimator, name, rank = _build_model(o)

    start = time.perf_counter()
    estimator.fit(m)
    users = np.concatenate([m.users, queries[0]])
    items = np.concatenate([m.items, queries[1]])
    pred = estimator.predict((users, items))
    seconds = time.perf_counter() - start

    _write_query_submission(o, queries, pred[m.n_entries:])
    if o.out_metrics:
        train_rmse = rmse_values(pred[: m.n_entries], m.values)
        _emit_metrics([_metrics_row(name, rank, o.seed, train_rmse, None, seconds, o.no_timing)],
                      o.out_metrics)
    return 0


_COMMANDS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "sweep-rank": cmd_sweep_rank,
    "blend": cmd_blend,
    "predict": cmd_predict,
}


def _add_option_flags(parser: argparse.ArgumentParser, command: str) -> None:
    parser.add_argument("--config", help="flat key = value option file")
    for key in _SUBCOMMAND_OPTIONS[command]:
        typ = _OPTIONS[key][0]
        flag = "--" + key.replace("_", "-")
        if typ is bool:
            parser.add_argument(flag, dest="lambda_" if key == "lambda" else key,
                                action="store_true", default=None)
        else:
            parser.add_argument(flag, dest="lambda_" if key == "lambda" else key,
                                type=typ, default=None)
    if command != "sweep-rank":
        parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                            help="extra estimator parameter override, repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfkit", description="Collaborative filtering experiment runner.")
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "train": "fit a preset on the full dataset",
        "evaluate": "fit on a split and report train/validation RMSE",
        "sweep-rank": "validation curve over a list of ranks",
        "blend": "stacked ensemble of base presets",
        "predict": "fit on all data and write a submission for query pairs",
    }
    for command in _COMMANDS:
        _add_option_flags(sub.add_parser(command, help=descriptions[command]), command)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        options = _Options(args.command, args)
        return _COMMANDS[args.command](options)
    except BrokenPipeError:
        return 1
    except (CfkitError, OSError, KeyError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
