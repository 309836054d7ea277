"""Command line front end.

Subcommands cover the full pipeline: dataset generation, training,
metric evaluation, latent traversals, attribute surfaces, the gamma/delta
sweep, and side-by-side reconstruction.  Conventions shared by every
command:

* flags override values from an optional JSON ``--config`` file, which in
  turn override built-in defaults; ``--dry-run`` prints the resolved
  configuration as one JSON line and exits 0
* outputs land in ``--out-dir`` (default ".", overridable through the
  ``ATTRVAE_OUT_DIR`` environment variable; an explicit flag wins)
* every command writes a ``*.manifest`` text file naming its input and
  output files by 64-bit FNV-1a digest
* report commands render a PNG figure next to each delimited output
* exit codes: 0 success, 2 bad invocation, 1 runtime failure
* reruns with identical inputs produce byte-identical outputs
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import figures
from .data import (DEFAULT_SHAPE_REG_ATTRS, DOMAINS, MeasureSamplerConfig,
                   ShapeSamplerConfig, load_dataset, one_hot_tokens,
                   sample_measure_dataset, sample_shape_dataset, save_dataset)
from .digest import fnv1a64_hex
from .errors import FormatError, TrainingDiverged
from .metrics import LatentAttributeTable, metric_report, mutual_information
from .music import (MUSIC_ATTRIBUTE_NAMES, Measure, TokenVocabulary,
                    music_attributes, piano_roll, piano_roll_lines)
from .pgm import tile_grid, write_pgm, read_pgm
from .regularize import RegularizationSpec, TrainConfig, train
from .rng import SeededRng
from .shapes import IMAGE_MEASURE_NAMES, SHAPE_KINDS, image_measures
from .vae import MlpVae, load_model, reconstruction_accuracy, save_model

OUT_DIR_ENV = "ATTRVAE_OUT_DIR"

SWEEP_LOW = -4.0   # default latent sweep endpoints for traversals and surfaces
SWEEP_HIGH = 4.0
SWEEP_STEPS = 9


class UsageError(Exception):
    """Invalid invocation: bad flag values, unknown names, missing inputs."""


# -- configuration plumbing ------------------------------------------------

def _name_list(v):
    items = [s.strip() for s in v.split(",")] if isinstance(v, str) else list(v)
    if not items or any(not s for s in items):
        raise UsageError(f"empty name in list {v!r}")
    return [str(s) for s in items]


def _float_list(v):
    try:
        return [float(s) for s in (v.split(",") if isinstance(v, str) else v)]
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {v!r}") from None


def _int_list(v):
    try:
        return [int(s) for s in (v.split(",") if isinstance(v, str) else v)]
    except ValueError:
        raise UsageError(f"not a comma-separated list of integers: {v!r}") from None


# per-command option tables: key -> (default, argparse type or list kind)
_GEN_OPTS = {
    "domain": (None, str),
    "n": (1000, int),
    "seed": (0, int),
    "out": (None, str),
    "side": (16, int),
    "scale_low": (0.2, float),
    "scale_high": (0.9, float),
    "kinds": (list(SHAPE_KINDS), "names"),
    "onset_prob": (0.35, float),
    "sustain_prob": (0.7, float),
    "step_span": (5, int),
    "midi_low": (48, int),
    "midi_high": (84, int),
}

_TRAIN_CORE_OPTS = {
    "data": (None, str),
    "attributes": (None, "names"),
    "gamma": (10.0, float),
    "delta": (1.0, float),
    "beta": (1.0, float),
    "epochs": (30, int),
    "batch_size": (64, int),
    "lr": (1e-3, float),
    "latent": (8, int),
    "hidden": ([128, 64], "ints"),
    "activation": ("relu", str),
    "seed": (0, int),
    "reg_on_mean": (False, "flag"),
    "val_fraction": (0.1, float),
}

_TRAIN_OPTS = {**_TRAIN_CORE_OPTS, "out": ("model.ckpt", str)}

_EVAL_OPTS = {
    "checkpoint": (None, str),
    "data": (None, str),
    "attributes": (None, "names"),
    "bins": (20, int),
    "split_seed": (0, int),
    "absolute_scc": (False, "flag"),
}

_TRAVERSE_OPTS = {
    "checkpoint": (None, str),
    "data": (None, str),
    "attribute": (None, str),
    "index": (0, int),
    "anchor_file": (None, str),
    "dim": (None, int),
    "low": (SWEEP_LOW, float),
    "high": (SWEEP_HIGH, float),
    "steps": (SWEEP_STEPS, int),
}

_SURFACE_OPTS = {
    "checkpoint": (None, str),
    "attribute": (None, str),
    "other_dim": (None, int),
    "low": (SWEEP_LOW, float),
    "high": (SWEEP_HIGH, float),
    "steps": (SWEEP_STEPS, int),
    "seed": (0, int),
}

_SWEEP_OPTS = {
    **{k: v for k, v in _TRAIN_CORE_OPTS.items() if k not in ("gamma", "delta")},
    "gammas": ([0.0, 1.0, 10.0], "floats"),
    "deltas": ([1.0], "floats"),
    "eval_data": (None, str),
    "jobs": (1, int),
    "bins": (20, int),
    "split_seed": (0, int),
}

_RECONSTRUCT_OPTS = {
    "checkpoint": (None, str),
    "data": (None, str),
    "indices": (list(range(8)), "ints"),
}

_COMMANDS = {
    "gen-data": _GEN_OPTS,
    "train": _TRAIN_OPTS,
    "eval": _EVAL_OPTS,
    "traverse": _TRAVERSE_OPTS,
    "surface": _SURFACE_OPTS,
    "sweep": _SWEEP_OPTS,
    "reconstruct": _RECONSTRUCT_OPTS,
}

_LIST_KINDS = {"names": _name_list, "floats": _float_list, "ints": _int_list}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attrvae")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, opts in _COMMANDS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", default=None, help="JSON file of option defaults")
        p.add_argument("--out-dir", default=None, help=f"output directory (or ${OUT_DIR_ENV})")
        p.add_argument("--dry-run", action="store_true")
        for key, (_, kind) in opts.items():
            flag = "--" + key.replace("_", "-")
            if kind == "flag":
                p.add_argument(flag, action="store_true", default=None)
            elif kind in _LIST_KINDS:
                p.add_argument(flag, type=str, default=None)
            else:
                p.add_argument(flag, type=kind, default=None)
    return parser


def _resolve_config(args, opts) -> dict:
    """Defaults, then config-file values, then explicitly passed flags."""
    cfg = {k: default for k, (default, _) in opts.items()}
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_vals = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(file_vals, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(file_vals) - set(opts))
        if unknown:
            raise UsageError(f"unknown config keys {unknown}; valid: {sorted(opts)}")
        cfg.update(file_vals)
    for key in opts:
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    for key, (_, kind) in opts.items():
        if kind in _LIST_KINDS and cfg[key] is not None:
            cfg[key] = _LIST_KINDS[kind](cfg[key])
    return cfg


def _require(cfg, key):
    if cfg[key] is None:
        raise UsageError(f"--{key.replace('_', '-')} is required")
    return cfg[key]


def _out_dir(args) -> str:
    out = args.out_dir or os.environ.get(OUT_DIR_ENV) or "."
    return out


def _in_dir(out_dir, name) -> str:
    return name if os.path.isabs(name) else os.path.join(out_dir, name)


def _file_digest(path) -> str:
    with open(path, "rb") as fh:
        return fnv1a64_hex(fh.read())


def _write_manifest(path, command, cfg, inputs, outputs) -> None:
    """Structured text: the resolved config plus input/output file digests."""
    lines = ["attrvae-manifest v=1", f"command {command}",
             "config " + json.dumps(cfg, sort_keys=True, separators=(",", ":"))]
    for role, file_path in inputs:
        lines.append(f"input {role} {os.path.basename(str(file_path))} {_file_digest(file_path)}")
    for role, file_path in outputs:
        lines.append(f"output {role} {os.path.basename(str(file_path))} {_file_digest(file_path)}")
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


# -- shared model plumbing -------------------------------------------------

def _default_attributes(domain: str) -> list:
    if domain == "shapes":
        return list(DEFAULT_SHAPE_REG_ATTRS)
    return list(MUSIC_ATTRIBUTE_NAMES)


def _check_attributes(names, available) -> None:
    for name in names:
        if name not in available:
            raise UsageError(f"unknown attribute {name!r}; available: {list(available)}")


def _train_core(ds, data_path, cfg):
    """Train one model on a loaded dataset; shared by train and sweep."""
    names = cfg["attributes"] or _default_attributes(ds.domain)
    _check_attributes(names, ds.attribute_names)
    spec = RegularizationSpec.sequential(names)
    x = ds.model_inputs()
    model = MlpVae(input_width=x.shape[1], latent_dim=cfg["latent"],
                   hidden=tuple(cfg["hidden"]), activation=cfg["activation"],
                   **ds.model_head())
    try:
        spec.validate(model.latent_dim, set(names))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    model.init_weights(SeededRng(cfg["seed"]).child(1))
    tc = TrainConfig(beta=cfg["beta"], gamma=cfg["gamma"], delta=cfg["delta"],
                     epochs=cfg["epochs"], batch_size=cfg["batch_size"],
                     learning_rate=cfg["lr"], seed=cfg["seed"],
                     reg_on_mean=bool(cfg["reg_on_mean"]),
                     val_fraction=cfg["val_fraction"])
    log = train(model, x, ds.attribute_dict(names), spec, tc)
    extra = {
        "domain": ds.domain,
        "attributes": list(spec.names),
        "dims": [dim for _, dim in spec.pairs],
        "train_config": tc.as_dict(),
        "data": {"file": os.path.basename(str(data_path)),
                 "digest": _file_digest(data_path),
                 "manifest": ds.manifest},
    }
    return model, log, extra


def _eval_report(model, ds, names, bins, split_seed, absolute_scc):
    x = ds.model_inputs()
    if x.shape[1] != model.input_width:
        raise FormatError(f"checkpoint expects input width {model.input_width}, "
                          f"dataset rows have width {x.shape[1]}")
    z = model.encode_mean(x)
    table = LatentAttributeTable(z, np.stack([ds.attribute(n) for n in names]),
                                 tuple(names))
    acc = reconstruction_accuracy(model.reconstruct_mean(x), x, model.head,
                                  seq_len=model.seq_len, vocab_size=model.vocab_size)
    return metric_report(table, bins=bins, split_seed=split_seed,
                         absolute_scc=absolute_scc, reconstruction_accuracy=acc)


def _image_side(model, extra) -> int:
    side = extra.get("data", {}).get("manifest", {}).get("config", {}).get("side")
    return int(side) if side else int(round(np.sqrt(model.input_width)))


def _model_vocab(extra) -> TokenVocabulary:
    v = extra.get("data", {}).get("manifest", {}).get("vocab")
    if v:
        return TokenVocabulary(midi_low=v["midi_low"], midi_high=v["midi_high"])
    return TokenVocabulary()


def _logits_to_measures(logits, seq_len, vocab_size, vocab):
    """Per-position argmax, leniently coerced (holds with no note become rests)."""
    ids = np.asarray(logits).reshape(-1, seq_len, vocab_size).argmax(axis=2)
    return [Measure.from_tokens(row, vocab, strict=False) for row in ids]


def _decoded_measures(model, z, vocab):
    return _logits_to_measures(model.decode(z).data, model.seq_len,
                               model.vocab_size, vocab)


def _traversal_dim(model, extra, ds, name, override):
    """The latent dimension a traversal sweeps for one attribute.

    Regularized models pin each attribute to its trained dimension.  For an
    unregularized model (gamma 0) the sweep uses the dimension with the
    highest mutual information with the attribute, estimated on the given
    dataset.
    """
    if override is not None:
        if not 0 <= override < model.latent_dim:
            raise UsageError(f"--dim must be in [0, {model.latent_dim})")
        return int(override)
    dims = dict(zip(extra["attributes"], extra["dims"]))
    if float(extra["train_config"]["gamma"]) != 0.0:
        return dims[name]
    z = model.encode_mean(ds.model_inputs())
    a = ds.attribute(name)
    scores = [mutual_information(z[:, d], a) for d in range(model.latent_dim)]
    return int(np.argmax(scores))


# -- commands --------------------------------------------------------------

def cmd_gen_data(cfg, out_dir) -> int:
    domain = _require(cfg, "domain")
    if domain not in DOMAINS:
        raise UsageError(f"--domain must be one of {list(DOMAINS)}, got {domain!r}")
    if cfg["n"] < 1:
        raise UsageError("--n must be at least 1")
    try:
        if domain == "shapes":
            sampler = ShapeSamplerConfig(side=cfg["side"], scale_low=cfg["scale_low"],
                                         scale_high=cfg["scale_high"],
                                         kinds=tuple(cfg["kinds"]))
            unknown = sorted(set(sampler.kinds) - set(SHAPE_KINDS))
            if unknown:
                raise UsageError(f"unknown shape kinds {unknown}; valid: {list(SHAPE_KINDS)}")
            ds = sample_shape_dataset(cfg["n"], cfg["seed"], sampler)
        else:
            sampler = MeasureSamplerConfig(onset_prob=cfg["onset_prob"],
                                           sustain_prob=cfg["sustain_prob"],
                                           step_span=cfg["step_span"],
                                           midi_low=cfg["midi_low"],
                                           midi_high=cfg["midi_high"])
            ds = sample_measure_dataset(cfg["n"], cfg["seed"], sampler)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out_path = _in_dir(out_dir, cfg["out"] or f"{domain}.ds")
    digest = save_dataset(ds, out_path)
    _write_manifest(out_path + ".manifest", "gen-data", cfg, [],
                    [("dataset", out_path)])
    print(digest)
    return 0


def cmd_train(cfg, out_dir) -> int:
    data_path = _require(cfg, "data")
    ds = load_dataset(data_path)
    model, log, extra = _train_core(ds, data_path, cfg)
    ckpt = _in_dir(out_dir, cfg["out"])
    log_path = os.path.join(out_dir, "train_log.csv")
    fig_path = os.path.join(out_dir, "train_curves.png")
    save_model(model, ckpt, extra)
    log.to_csv(log_path)
    figures.training_curves(log.rows, log.columns, fig_path)
    _write_manifest(os.path.join(out_dir, "train.manifest"), "train", cfg,
                    [("data", data_path)],
                    [("checkpoint", ckpt), ("sidecar", ckpt + ".json"),
                     ("log", log_path), ("figure", fig_path)])
    acc = log.rows[-1]["val_accuracy"] if log.rows else float("nan")
    print(f"checkpoint {ckpt} epochs {len(log.rows)} val_accuracy {acc!r}")
    return 0


def cmd_eval(cfg, out_dir) -> int:
    model, extra = load_model(_require(cfg, "checkpoint"))
    ds = load_dataset(_require(cfg, "data"))
    width = ds.width if ds.domain == "shapes" else ds.width * ds.vocab().size
    if width != model.input_width:
        raise FormatError(f"checkpoint expects input width {model.input_width}, "
                          f"dataset rows encode to width {width}")
    names = cfg["attributes"] or extra["attributes"]
    _check_attributes(names, ds.attribute_names)
    report = _eval_report(model, ds, names, cfg["bins"], cfg["split_seed"],
                          bool(cfg["absolute_scc"]))
    csv_path = os.path.join(out_dir, "metrics.csv")
    fig_path = os.path.join(out_dir, "metric_bars.png")
    report.to_csv(csv_path)
    figures.metric_bars(report, fig_path)
    _write_manifest(os.path.join(out_dir, "eval.manifest"), "eval", cfg,
                    [("checkpoint", cfg["checkpoint"]),
                     ("sidecar", cfg["checkpoint"] + ".json"),
                     ("data", cfg["data"])],
                    [("report", csv_path), ("figure", fig_path)])
    summary = " ".join(f"{k}={v:.6f}" for k, v in report.means().items())
    print(f"{summary} reconstruction_accuracy={report.reconstruction_accuracy:.6f}")
    return 0


def _traversal_anchor(model, extra, ds, cfg):
    if cfg["anchor_file"] is not None:
        if extra["domain"] == "shapes":
            img = read_pgm(cfg["anchor_file"])
            if img.size != model.input_width:
                raise UsageError(f"anchor image has {img.size} pixels, "
                                 f"model expects {model.input_width}")
            return img.reshape(1, -1)
        with open(cfg["anchor_file"], encoding="ascii") as fh:
            line = fh.readline()
        measure = Measure.from_text(line, ds.vocab())
        return one_hot_tokens(np.asarray(measure.tokens)[None, :], ds.vocab().size)
    index = cfg["index"]
    if not 0 <= index < ds.n:
        raise UsageError(f"--index must be in [0, {ds.n})")
    return ds.model_inputs()[index : index + 1]


def cmd_traverse(cfg, out_dir) -> int:
    model, extra = load_model(_require(cfg, "checkpoint"))
    ds = load_dataset(_require(cfg, "data"))
    if cfg["attribute"] is not None:
        names = [cfg["attribute"]]
        if names[0] not in extra["attributes"]:
            raise UsageError(f"unknown attribute {names[0]!r}; "
                             f"checkpoint regularizes: {extra['attributes']}")
    else:
        names = list(extra["attributes"])
        if cfg["dim"] is not None:
            raise UsageError("--dim needs a single --attribute")
    if cfg["steps"] < 1:
        raise UsageError("--steps must be at least 1")
    anchor = _traversal_anchor(model, extra, ds, cfg)
    z0 = model.encode_mean(anchor)[0]
    values = np.linspace(cfg["low"], cfg["high"], cfg["steps"])

    outputs = []
    csv_rows = []
    per_attr_measured = {}
    roll_blocks = []
    for name in names:
        dim = _traversal_dim(model, extra, ds, name, cfg["dim"])
        z = np.tile(z0, (cfg["steps"], 1))
        z[:, dim] = values
        if extra["domain"] == "shapes":
            side = _image_side(model, extra)
            images = model.decode(z).data.reshape(cfg["steps"], side, side)
            outputs.append(list(images))
            for step, value in enumerate(values):
                m = image_measures(images[step])
                csv_rows.append((name, step, float(value), m["area"], m["x"], m["y"]))
        else:
            measures = _decoded_measures(model, z, _model_vocab(extra))
            measured = [music_attributes(m)[name] for m in measures]
            per_attr_measured[name] = measured
            for step, value in enumerate(values):
                csv_rows.append((name, step, float(value), float(measured[step])))
                block = [f"attribute {name} dim {dim} step {step} z {float(value)!r}"]
                block.extend(piano_roll_lines(measures[step]))
                roll_blocks.append("\n".join(block))

    csv_path = os.path.join(out_dir, "traversal.csv")
    fig_path = os.path.join(out_dir, "traversal.png")
    if extra["domain"] == "shapes":
        grid_path = os.path.join(out_dir, "traversal.pgm")
        grid = tile_grid(outputs)
        write_pgm(grid, grid_path)
        figures.image_grid(grid, fig_path, row_labels=names)
        _write_csv(csv_path, ("attribute", "step", "z", "area", "x", "y"), csv_rows)
        main_out = [("grid", grid_path)]
    else:
        text_path = os.path.join(out_dir, "traversal.txt")
        with open(text_path, "w", encoding="ascii", newline="") as fh:
            fh.write("\n\n".join(roll_blocks) + "\n")
        figures.attribute_sweep(values, per_attr_measured, fig_path)
        _write_csv(csv_path, ("attribute", "step", "z", "value"), csv_rows)
        main_out = [("rolls", text_path)]
    _write_manifest(os.path.join(out_dir, "traverse.manifest"), "traverse", cfg,
                    [("checkpoint", cfg["checkpoint"]),
                     ("sidecar", cfg["checkpoint"] + ".json"),
                     ("data", cfg["data"])],
                    main_out + [("table", csv_path), ("figure", fig_path)])
    print(f"traversal attributes {','.join(names)} steps {cfg['steps']}")
    return 0


def cmd_surface(cfg, out_dir) -> int:
    model, extra = load_model(_require(cfg, "checkpoint"))
    name = _require(cfg, "attribute")
    other = _require(cfg, "other_dim")
    if name not in extra["attributes"]:
        raise UsageError(f"unknown attribute {name!r}; "
                         f"checkpoint regularizes: {extra['attributes']}")
    if extra["domain"] == "shapes" and name not in IMAGE_MEASURE_NAMES:
        raise UsageError(f"attribute {name!r} is not measurable from decoded "
                         f"pixels; choose one of {list(IMAGE_MEASURE_NAMES)}")
    x_dim = dict(zip(extra["attributes"], extra["dims"]))[name]
    if not 0 <= other < model.latent_dim:
        raise UsageError(f"--other-dim must be in [0, {model.latent_dim})")
    if other == x_dim:
        raise UsageError(f"--other-dim {other} is the regularized dimension of "
                         f"{name!r}; pick a different one")
    if cfg["steps"] < 1:
        raise UsageError("--steps must be at least 1")

    steps = cfg["steps"]
    axis = np.linspace(cfg["low"], cfg["high"], steps)
    fixed = SeededRng(cfg["seed"]).normal((model.latent_dim,))
    z = np.tile(fixed, (steps * steps, 1))
    z[:, x_dim] = np.tile(axis, steps)          # x varies fastest
    z[:, other] = np.repeat(axis, steps)
    if extra["domain"] == "shapes":
        side = _image_side(model, extra)
        decoded = model.decode(z).data.reshape(-1, side, side)
        flat = [image_measures(img)[name] for img in decoded]
    else:
        decoded = _decoded_measures(model, z, _model_vocab(extra))
        flat = [music_attributes(m)[name] for m in decoded]
    rows = [(float(z[i, x_dim]), float(z[i, other]), float(flat[i]))
            for i in range(steps * steps)]

    csv_path = os.path.join(out_dir, "surface.csv")
    fig_path = os.path.join(out_dir, "surface.png")
    _write_csv(csv_path, ("x", "y", "value"), rows)
    grid = np.asarray(flat, dtype=np.float64).reshape(steps, steps)
    figures.surface_heatmap(axis, axis, grid, fig_path,
                            x_label=f"dim {x_dim} ({name})", y_label=f"dim {other}")
    _write_manifest(os.path.join(out_dir, "surface.manifest"), "surface", cfg,
                    [("checkpoint", cfg["checkpoint"]),
                     ("sidecar", cfg["checkpoint"] + ".json")],
                    [("table", csv_path), ("figure", fig_path)])
    print(f"surface {name} dim {x_dim} vs dim {other}: {len(rows)} rows")
    return 0


def _sweep_point(payload) -> tuple:
    """One grid point: train with (gamma, delta), report accuracy and
    mean interpretability.  Module-level so worker processes can run it."""
    cfg = dict(payload)
    ds = load_dataset(cfg["data"])
    model, log, extra = _train_core(ds, cfg["data"], cfg)
    eval_ds = load_dataset(cfg["eval_data"]) if cfg["eval_data"] else ds
    names = cfg["attributes"] or _default_attributes(ds.domain)
    report = _eval_report(model, eval_ds, names, cfg["bins"], cfg["split_seed"], False)
    return (cfg["gamma"], cfg["delta"], report.reconstruction_accuracy,
            report.means()["interpretability"])


def cmd_sweep(cfg, out_dir) -> int:
    data_path = _require(cfg, "data")
    if not cfg["gammas"] or not cfg["deltas"]:
        raise UsageError("--gammas and --deltas must be non-empty")
    if cfg["jobs"] < 1:
        raise UsageError("--jobs must be at least 1")
    payloads = [{**cfg, "gamma": g, "delta": d}
                for g in cfg["gammas"] for d in cfg["deltas"]]
    if cfg["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
            results = list(pool.map(_sweep_point, payloads))
    else:
        results = [_sweep_point(p) for p in payloads]

    csv_path = os.path.join(out_dir, "sweep.csv")
    fig_path = os.path.join(out_dir, "sweep.png")
    _write_csv(csv_path, ("gamma", "delta", "recon_accuracy", "interpretability"),
               [tuple(float(v) for v in row) for row in results])
    fig_rows = [{"gamma": g, "delta": d, "recon_accuracy": a, "interpretability": i}
                for g, d, a, i in results]
    figures.sweep_tradeoff(fig_rows, fig_path)
    inputs = [("data", data_path)]
    if cfg["eval_data"]:
        inputs.append(("eval_data", cfg["eval_data"]))
    _write_manifest(os.path.join(out_dir, "sweep.manifest"), "sweep", cfg, inputs,
                    [("table", csv_path), ("figure", fig_path)])
    for g, d, a, i in results:
        print(f"gamma {g!r} delta {d!r} recon_accuracy {a!r} interpretability {i!r}")
    return 0


def cmd_reconstruct(cfg, out_dir) -> int:
    model, extra = load_model(_require(cfg, "checkpoint"))
    ds = load_dataset(_require(cfg, "data"))
    indices = cfg["indices"]
    for i in indices:
        if not 0 <= i < ds.n:
            raise UsageError(f"index {i} out of range [0, {ds.n})")
    x = ds.model_inputs()[indices]
    if x.shape[1] != model.input_width:
        raise FormatError(f"checkpoint expects input width {model.input_width}, "
                          f"dataset rows have width {x.shape[1]}")
    recon = model.reconstruct_mean(x)
    acc = reconstruction_accuracy(recon, x, model.head,
                                  seq_len=model.seq_len, vocab_size=model.vocab_size)

    fig_path = os.path.join(out_dir, "reconstruction.png")
    if extra["domain"] == "shapes":
        side = _image_side(model, extra)
        top = [row.reshape(side, side) for row in x]
        bottom = [row.reshape(side, side) for row in recon]
        grid = tile_grid([top, bottom])
        main_path = os.path.join(out_dir, "reconstruction.pgm")
        write_pgm(grid, main_path)
        figures.image_grid(grid, fig_path, row_labels=("input", "decoded"))
    else:
        originals = [ds.measure(i) for i in indices]
        decoded = _logits_to_measures(recon, model.seq_len, model.vocab_size,
                                      _model_vocab(extra))
        main_path = os.path.join(out_dir, "reconstruction.txt")
        with open(main_path, "w", encoding="ascii", newline="") as fh:
            for i, (orig, dec) in enumerate(zip(originals, decoded)):
                fh.write(f"index {indices[i]}\n")
                fh.write(f"in  {orig.to_text()}\n")
                fh.write(f"out {dec.to_text()}\n\n")
        rolls = []
        labels = []
        for i, (orig, dec) in enumerate(zip(originals, decoded)):
            rolls.extend([piano_roll(orig), piano_roll(dec)])
            labels.extend([f"in {indices[i]}", f"out {indices[i]}"])
        figures.piano_roll_panel(rolls, labels, fig_path)
    _write_manifest(os.path.join(out_dir, "reconstruct.manifest"), "reconstruct", cfg,
                    [("checkpoint", cfg["checkpoint"]),
                     ("sidecar", cfg["checkpoint"] + ".json"),
                     ("data", cfg["data"])],
                    [("output", main_path), ("figure", fig_path)])
    print(f"reconstruction_accuracy {acc!r}")
    return 0


_RUNNERS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "traverse": cmd_traverse,
    "surface": cmd_surface,
    "sweep": cmd_sweep,
    "reconstruct": cmd_reconstruct,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse printed its own message; 2 on error
        return int(exc.code or 0)
    try:
        cfg = _resolve_config(args, _COMMANDS[args.command])
        out_dir = _out_dir(args)
        if args.dry_run:
            print(json.dumps({"command": args.command, "out_dir": out_dir, **cfg},
                             sort_keys=True))
            return 0
        os.makedirs(out_dir, exist_ok=True)
        return _RUNNERS[args.command](cfg, out_dir)
    except UsageError as exc:
        print(f"attrvae {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, FormatError, TrainingDiverged, ValueError, KeyError) as exc:
        print(f"attrvae {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
