"""Command-line front end.

Every subcommand reads an optional flat key-value config file, applies
explicit flags on top (flags win), runs one pipeline, and writes its
results next to a JSON run manifest that records the tool version, the
merged config, and the output paths.  Result CSVs carry a comment line
referencing the manifest; result JSONs carry a "manifest" key.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .census import emit_table, table_to_csv
from .channel import ChannelConfig
from .decoder import DecoderConfig
from .floorpred import (
    PredictionJob,
    load_job,
    predict_curve,
    stats_from_capture,
    stats_from_dde,
)
from .simharness import McConfig, SemiAnalyticConfig, run_monte_carlo, semi_analytic_floor
from .tanner import load_alist, load_trapping_sets


class ConfigError(ValueError):
    """Bad or missing configuration; maps to exit code 2."""


def _f(x: str) -> float:
    return float(x)


def _i(x: str) -> int:
    return int(float(x))  # accepts 1e5


def _sat(x: str):
    return None if x.lower() in ("none", "inf", "off") else float(x)


def _floats(x: str) -> tuple:
    return tuple(float(v) for v in x.replace(",", " ").split())


# per-command option table: dest -> (converter, default, help)
_SPECS = {
    "simulate": {
        "alist": (str, None, "parity-check matrix (alist format)"),
        "ebn0": (_f, None, "Eb/N0 in dB"),
        "rate": (_f, None, "code rate; default (n-m)/n from the alist"),
        "sat": (_sat, 25.0, "LLR clamp at check output; 'none' disables"),
        "mode": (str, "pairwise", "check update: pairwise|exact-tanh|approx|min-sum"),
        "max_iters": (_i, 50, "decoding iterations"),
        "ec_window": (_i, 12, "trailing window for eventually-correct accounting"),
        "frames": (_i, 100_000, "frame budget"),
        "target_errors": (_i, None, "stop after this many frame errors"),
        "seed": (_i, 0, "run seed"),
        "batch_size": (_i, 256, "frames per batch"),
        "workers": (_i, 1, "parallel workers"),
        "out": (str, "simulate", "output prefix"),
    },
    "predict": {
        "job": (str, None, "prediction job file"),
        "stats_source": (str, None, "override: dde|spa"),
        "sat": (_sat, "keep", "override saturation"),
        "horizon": (_i, None, "override model horizon"),
        "inversion_iters": (_i, None, "override inversion iterations"),
        "snr": (_floats, None, "override SNR grid, comma separated dB"),
        "cache_dir": (str, None, "stats cache directory"),
        "workers": (_i, 1, "parallel workers"),
        "out": (str, "predict", "output prefix"),
    },
    "dde": {
        "dv": (_i, 3, "variable degree"),
        "dc": (_i, 6, "check degree"),
        "ebn0": (_f, None, "Eb/N0 in dB"),
        "rate": (_f, None, "code rate; default 1 - dv/dc"),
        "sat": (_sat, 25.0, "LLR clamp; 'none' disables"),
        "iters": (_i, 10, "iterations to evolve"),
        "out": (str, "dde", "output prefix"),
    },
    "enumerate": {
        "dv": (_i, 3, "variable degree"),
        "amax": (_i, 8, "largest set size"),
        "r_cutoff": (_sat, None, "keep only rows with r_max above this"),
        "out": (str, "census", "output prefix"),
    },
    "richardson": {
        "alist": (str, None, "parity-check matrix (alist format)"),
        "set": (str, None, "failure-set file; first line is used"),
        "ebn0": (_f, None, "Eb/N0 in dB"),
        "rate": (_f, None, "code rate; default (n-m)/n from the alist"),
        "mode": (str, "exact-match", "exact-match|saturation-phase"),
        "sat": (_sat, 25.0, "decoder clamp (exact-match) / phase-2 clamp"),
        "sat_iters": (_i, 20, "saturated iterations (saturation-phase)"),
        "max_iters": (_i, 50, "decoding iterations"),
        "s_lo": (_f, -2.2, "most negative mean-noise grid point"),
        "s_hi": (_f, -0.8, "least negative mean-noise grid point"),
        "s_points": (_i, 8, "grid size"),
        "frames_per_point": (_i, 20_000, "frame cap per grid point"),
        "target_failures": (_i, 50, "early stop per grid point"),
        "refine": (_i, 2, "grid refinement rounds"),
        "ec_window": (_i, 12, "trailing window"),
        "seed": (_i, 0, "run seed"),
        "workers": (_i, 1, "parallel workers"),
        "out": (str, "richardson", "output prefix"),
    },
    "stats": {
        "source": (str, "dde", "dde|spa"),
        "alist": (str, None, "code for spa capture (or rate inference)"),
        "dv": (_i, 3, "variable degree (dde source)"),
        "dc": (_i, 6, "check degree (dde source)"),
        "ebn0": (_f, None, "Eb/N0 in dB"),
        "rate": (_f, None, "code rate; default 1 - dv/dc or from the alist"),
        "sat": (_sat, 25.0, "LLR clamp; 'none' disables"),
        "iters": (_i, 20, "iterations to collect"),
        "frames": (_i, 100, "capture frames (spa source)"),
        "mode": (str, "pairwise", "check update (spa source)"),
        "seed": (_i, 0, "capture seed"),
        "out": (str, "stats", "output prefix"),
    },
}

_REQUIRED = {
    "simulate": ("alist", "ebn0"),
    "predict": ("job",),
    "dde": ("ebn0",),
    "enumerate": (),
    "richardson": ("alist", "set", "ebn0"),
    "stats": ("ebn0",),
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="errorfloor")
    p.add_argument("--version", action="version", version=f"errorfloor {__version__}")
    subs = p.add_subparsers(dest="command", required=True)
    for cmd, spec in _SPECS.items():
        sp = subs.add_parser(cmd)
        sp.add_argument("--config", default=None, help="flat key = value file; flags override it")
        for dest, (_, _, help_) in spec.items():
            sp.add_argument(f"--{dest.replace('_', '-')}", dest=dest, default=None, help=help_)
    return p


def _read_config(path: str) -> dict:
    kv = {}
    try:
        fh = open(path)
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from None
    with fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected 'key = value' in {path}, got {line!r}")
            k, v = line.split("=", 1)
            kv[k.strip().replace("-", "_")] = v.strip()
    return kv


def _merge(cmd: str, args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags, with type coercion."""
    spec = _SPECS[cmd]
    cfg = {dest: default for dest, (_, default, _) in spec.items()}
    if args.config:
        for k, v in _read_config(args.config).items():
            if k not in spec:
                raise ConfigError(f"unknown config key {k!r} for {cmd}")
            cfg[k] = spec[k][0](v)
    for dest, (conv, _, _) in spec.items():
        v = getattr(args, dest)
        if v is not None:
            try:
                cfg[dest] = conv(v)
            except ValueError as e:
                raise ConfigError(f"bad value for --{dest.replace('_', '-')}: {e}") from None
    for dest in _REQUIRED[cmd]:
        if cfg[dest] is None:
            raise ConfigError(f"--{dest.replace('_', '-')} is required for {cmd}")
    return cfg


def _load_code(path: str):
    try:
        return load_alist(path)
    except OSError as e:
        raise ConfigError(f"cannot read alist: {e}") from None
    except ValueError as e:
        raise ConfigError(f"bad alist {path}: {e}") from None


def _rate_of(cfg_rate, H) -> float:
    return cfg_rate if cfg_rate is not None else (H.n_vars - H.n_chks) / H.n_vars


def _build(ctor, *args, **kwargs):
    """Constructor validation failures are configuration errors."""
    try:
        return ctor(*args, **kwargs)
    except ValueError as e:
        raise ConfigError(str(e)) from None


class _Manifest:
    def __init__(self, cmd: str, cfg: dict, out_prefix: str):
        self.path = Path(f"{out_prefix}.manifest.json")
        self.doc = {
            "schema": "run-manifest v1",
            "tool": f"errorfloor {__version__}",
            "command": cmd,
            "config": {k: v for k, v in sorted(cfg.items())},
            "seed": cfg.get("seed"),
            "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "outputs": [],
        }

    def csv_open(self, path: Path):
        self.doc["outputs"].append(str(path))
        fh = open(path, "w", newline="")
        fh.write(f"# manifest: {self.path.name}\n")
        return fh

    def json_write(self, path: Path, payload: dict):
        self.doc["outputs"].append(str(path))
        payload = {"manifest": self.path.name, **payload}
        path.write_text(json.dumps(payload, indent=2) + "\n")

    def close(self):
        self.doc["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        self.path.write_text(json.dumps(self.doc, indent=2) + "\n")


def cmd_simulate(cfg: dict) -> int:
    H = _load_code(cfg["alist"])
    chan = _build(ChannelConfig, cfg["ebn0"], _rate_of(cfg["rate"], H))
    dec = _build(
        DecoderConfig,
        mode=cfg["mode"], max_iters=cfg["max_iters"], saturation=cfg["sat"],
        ec_window=cfg["ec_window"],
    )
    mc = _build(
        McConfig,
        max_frames=cfg["frames"], target_errors=cfg["target_errors"], seed=cfg["seed"],
        workers=cfg["workers"], batch_size=cfg["batch_size"],
    )
    res = run_monte_carlo(H, chan, dec, mc)
    man = _Manifest("simulate", cfg, cfg["out"])
    with man.csv_open(Path(f"{cfg['out']}.csv")) as fh:
        fh.write("ebn0_db,rate,saturation,frames,frame_errors,bit_errors,"
                 "fer,fer_lo,fer_hi,ber,ber_lo,ber_hi\n")
        sat = "" if cfg["sat"] is None else f"{cfg['sat']:.6g}"
        fh.write(",".join([f"{chan.ebn0_db:.6g}", f"{chan.rate:.6g}", sat,
                           str(res.frames), str(res.frame_errors), str(res.bit_errors)]
                          + [f"{x:.6g}" for x in (res.fer, *res.fer_ci, res.ber, *res.ber_ci)])
                 + "\n")
    man.json_write(Path(f"{cfg['out']}.json"), res.to_dict())
    man.close()
    return 0


def cmd_predict(cfg: dict) -> int:
    try:
        job = load_job(cfg["job"])
    except OSError as e:
        raise ConfigError(f"cannot read job file: {e}") from None
    except ValueError as e:
        raise ConfigError(f"bad job file: {e}") from None
    edits = {}
    if cfg["stats_source"] is not None:
        edits["source"] = cfg["stats_source"]
    if cfg["sat"] != "keep":
        edits["saturation"] = cfg["sat"]
    if cfg["horizon"] is not None:
        edits["horizon"] = cfg["horizon"]
    if cfg["inversion_iters"] is not None:
        edits["inversion_iters"] = cfg["inversion_iters"]
    if cfg["snr"] is not None:
        edits["snr"] = cfg["snr"]
    if "snr" in edits:
        edits["snr_grid"] = edits.pop("snr")
    if edits:
        job = dataclasses.replace(job, **edits)
    try:
        report = predict_curve(job, cache_dir=cfg["cache_dir"], workers=cfg["workers"])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    man = _Manifest("predict", {**cfg, "code_id": job.code_id}, cfg["out"])
    with man.csv_open(Path(f"{cfg['out']}.csv")) as fh:
        report.to_csv(fh)
    man.json_write(Path(f"{cfg['out']}.json"), json.loads(report.to_json()))
    man.close()
    return 0


def cmd_dde(cfg: dict) -> int:
    rate = cfg["rate"] if cfg["rate"] is not None else 1.0 - cfg["dv"] / cfg["dc"]
    stats = stats_from_dde(_build(ChannelConfig, cfg["ebn0"], rate), cfg["dv"], cfg["dc"],
                           cfg["iters"], cfg["sat"])
    man = _Manifest("dde", cfg, cfg["out"])
    with man.csv_open(Path(f"{cfg['out']}.csv")) as fh:
        fh.write("# dde-table v1\n")
        fh.write("iteration,m_ex,var_ex,g_bar,p_e\n")
        for i in range(stats.n_iters):
            fh.write(f"{i + 1}," + ",".join(
                f"{x:.6g}" for x in (stats.m_ex[i], stats.var_ex[i],
                                     stats.g_bar[i], stats.p_e[i])) + "\n")
    man.close()
    return 0


def cmd_enumerate(cfg: dict) -> int:
    rows = emit_table(cfg["dv"], cfg["amax"], cfg["r_cutoff"])
    man = _Manifest("enumerate", cfg, cfg["out"])
    with man.csv_open(Path(f"{cfg['out']}.csv")) as fh:
        fh.write(f"# census v1 dv={cfg['dv']}\n")
        table_to_csv(rows, fh)
    man.close()
    return 0


def cmd_richardson(cfg: dict) -> int:
    H = _load_code(cfg["alist"])
    try:
        sets = load_trapping_sets(cfg["set"])
    except OSError as e:
        raise ConfigError(f"cannot read set file: {e}") from None
    except ValueError as e:
        raise ConfigError(f"bad set file: {e}") from None
    if not sets:
        raise ConfigError(f"no sets in {cfg['set']}")
    T = tuple(int(v) for v in sets[0])
    if any(v < 0 or v >= H.n_vars for v in T):
        raise ConfigError("set references variables outside the code")
    chan = _build(ChannelConfig, cfg["ebn0"], _rate_of(cfg["rate"], H))
    nonsat = cfg["mode"] == "saturation-phase"
    dec = _build(
        DecoderConfig,
        mode="pairwise", max_iters=cfg["max_iters"],
        saturation=None if nonsat else cfg["sat"], ec_window=cfg["ec_window"],
    )
    sa = _build(
        SemiAnalyticConfig,
        trap_set=T,
        s_grid=tuple(np.linspace(cfg["s_lo"], cfg["s_hi"], cfg["s_points"])),
        frames_per_point=cfg["frames_per_point"],
        target_failures=cfg["target_failures"],
        mode=cfg["mode"],
        sat_iters=cfg["sat_iters"],
        sat_limit=cfg["sat"] if cfg["sat"] is not None else 25.0,
        ec_window=cfg["ec_window"],
        seed=cfg["seed"],
        refine_rounds=cfg["refine"],
    )
    est = semi_analytic_floor(H, chan, dec, sa, workers=cfg["workers"])
    man = _Manifest("richardson", cfg, cfg["out"])
    man.json_write(Path(f"{cfg['out']}.json"), est.to_dict())
    man.close()
    return 0


def cmd_stats(cfg: dict) -> int:
    if cfg["source"] not in ("dde", "spa"):
        raise ConfigError(f"unknown stats source {cfg['source']!r}")
    if cfg["source"] == "spa":
        if cfg["alist"] is None:
            raise ConfigError("--alist is required for the spa source")
        H = _load_code(cfg["alist"])
        chan = _build(ChannelConfig, cfg["ebn0"], _rate_of(cfg["rate"], H))
        stats = stats_from_capture(
            H, chan, cfg["iters"], cfg["sat"], mode=cfg["mode"],
            n_frames=cfg["frames"], seed=cfg["seed"],
        )
    else:
        rate = cfg["rate"]
        if rate is None and cfg["alist"] is not None:
            rate = _rate_of(None, _load_code(cfg["alist"]))
        if rate is None:
            rate = 1.0 - cfg["dv"] / cfg["dc"]
        stats = stats_from_dde(_build(ChannelConfig, cfg["ebn0"], rate), cfg["dv"], cfg["dc"],
                               cfg["iters"], cfg["sat"])
    man = _Manifest("stats", cfg, cfg["out"])
    path = Path(f"{cfg['out']}.csv")
    man.doc["outputs"].append(str(path))
    stats.to_csv(path)
    man.close()
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "predict": cmd_predict,
    "dde": cmd_dde,
    "enumerate": cmd_enumerate,
    "richardson": cmd_richardson,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _merge(args.command, args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"runtime error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
