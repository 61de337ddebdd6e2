"""Command-line front end.

Config-file-first: every verb reads one JSON experiment document; flags
only override the seed, worker count, and output directory, so result
files are reproducible from the config alone.  All outputs land inside
--output-dir.  Exit codes: 0 success, 2 usage, 3 invalid config.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from . import constellations as con
from . import simkit as sk
from . import waveform as wf
from .errors import ConfigError, ParameterError

CONFIG_SCHEMA_VERSION = 1


def _fail_config(exc):
    path = getattr(exc, "json_path", "$")
    message = getattr(exc, "message", str(exc))
    print(f"error: config: {path}: {message}", file=sys.stderr)
    return 3


def _load(args):
    if not os.path.isfile(args.config):
        raise ConfigError("$", f"config file not found: {args.config}")
    config, doc = sk.load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.workers is not None:
        config = replace(config, run=replace(config.run, workers=args.workers))
    return config, doc


def _build_from_scheme(scheme):
    return scheme.build_constellation()


def _stats_line(c):
    stats = con.code_stats(c)
    return (
        f"scheme={c.scheme} Q={c.q} K={c.k} N={c.n} "
        f"complements={str(c.use_complements).lower()} size={c.size} "
        f"bits_per_symbol={c.bits_per_symbol} papr={stats.papr:.6g} "
        f"min_distance={stats.min_distance}"
    )


def cmd_construct(args):
    config, _ = _load(args)
    c = _build_from_scheme(config.scheme)
    print(_stats_line(c))
    os.makedirs(args.output_dir, exist_ok=True)
    con.save_constellation(c, os.path.join(args.output_dir, "constellation.json"))
    return 0


def cmd_stats(args):
    if not os.path.isfile(args.config):
        raise ConfigError("$", f"config file not found: {args.config}")
    c = con.load_constellation(args.config)
    print(_stats_line(c))
    return 0


def _sweep_points(doc, key="points"):
    sweep_doc = doc.get("sweep", {})
    points = sweep_doc.get(key)
    if not isinstance(points, list) or len(points) < 2:
        raise ConfigError(f"sweep.{key}", "need a list of at least 2 values")
    return [float(p) for p in points]


def cmd_ber_sweep(args):
    config, doc = _load(args)
    points = _sweep_points(doc)
    reports = sk.sweep(config, "snr", points, output_dir=args.output_dir)
    for p, r in zip(points, reports):
        print(f"snr={p:g} ber={r.ber:.6g} errors={r.bit_errors} "
              f"bits={r.bits_sent}")
    return 0


def cmd_dimming_sweep(args):
    config, doc = _load(args)
    points = _sweep_points(doc)
    reports = sk.sweep(config, "dimming", points, output_dir=args.output_dir)
    for p, r in zip(points, reports):
        achieved = r.params.get("achieved_dimming")
        print(f"target={p:g} achieved={achieved:.6g} ber={r.ber:.6g}")
    return 0


def cmd_isi_sweep(args):
    config, doc = _load(args)
    points = _sweep_points(doc)
    depths = doc.get("sweep", {}).get("depths", [1, 8])
    if not isinstance(depths, list) or not depths:
        raise ConfigError("sweep.depths", "need a nonempty list of depths")
    for depth in depths:
        derived = replace(config, interleaver_depth=int(depth))
        label = f"{config.scheme.kind}_d{int(depth)}"
        reports = sk.sweep(derived, "delay_spread", points,
                           output_dir=args.output_dir, label=label)
        for p, r in zip(points, reports):
            print(f"depth={depth} delay_spread={p:g} ber={r.ber:.6g} "
                  f"errors={r.bit_errors}")
    return 0


def cmd_nonlin_compare(args):
    config, doc = _load(args)
    compare = doc.get("compare")
    if not isinstance(compare, dict):
        raise ConfigError("compare", "missing comparison block")
    points = compare.get("saturation_points")
    if not isinstance(points, list) or len(points) < 2:
        raise ConfigError("compare.saturation_points",
                          "need a list of at least 2 values")
    mean_power = float(compare.get("mean_power", 1.0))
    ofdm_doc = dict(doc)
    ofdm_doc["scheme"] = compare.get("ofdm_scheme", {"kind": "dco_ofdm"})
    ofdm_doc.pop("compare", None)
    ofdm_config = sk.config_from_document(ofdm_doc)
    if args.seed is not None:
        ofdm_config = replace(ofdm_config, seed=args.seed)
    results = sk.nonlin_compare(
        config, ofdm_config, [float(p) for p in points],
        mean_power=mean_power, output_dir=args.output_dir,
    )
    ordering_holds = True
    for p, rm, ro in zip(points, results["meppm"], results["dco_ofdm"]):
        flag = "ok" if ro.ber >= rm.ber else "violated"
        ordering_holds &= ro.ber >= rm.ber
        print(f"saturation={p:g} meppm_ber={rm.ber:.6g} "
              f"dco_ofdm_ber={ro.ber:.6g} ordering={flag}")
    print(f"ordering_holds={str(ordering_holds).lower()}")
    return 0


def cmd_rate(args):
    config, doc = _load(args)
    rate_doc = doc.get("rate", {})
    n_colors = int(rate_doc.get("n_colors", 1))
    bits_cap = rate_doc.get("bits_per_symbol")
    c = _build_from_scheme(config.scheme)
    acc = sk.rate_accounting(
        c, config.geometry, config.device, n_colors,
        bits_per_symbol=None if bits_cap is None else int(bits_cap),
    )
    print(f"bits_per_slot={acc.bits_per_slot:.6g}")
    print(f"slot_rate_hz={acc.slot_rate:.6g}")
    print(f"per_color_mbps={acc.per_color_rate / 1e6:.0f}")
    print(f"aggregate_gbps={acc.aggregate_rate / 1e9:.1f}")
    os.makedirs(args.output_dir, exist_ok=True)
    with open(os.path.join(args.output_dir, "rate.json"), "w",
              encoding="utf-8") as fh:
        json.dump({
            "bits_per_slot": acc.bits_per_slot,
            "slot_rate_hz": acc.slot_rate,
            "per_color_bps": acc.per_color_rate,
            "n_colors": acc.n_colors,
            "aggregate_bps": acc.aggregate_rate,
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_flicker(args):
    config, doc = _load(args)
    flicker_doc = doc.get("flicker", {})
    n_symbols = int(flicker_doc.get("n_symbols", 10_000))
    windows = flicker_doc.get("window_symbols", [1, 2, 4])
    c = _build_from_scheme(config.scheme)
    rng = np.random.default_rng(config.seed)
    idx = rng.integers(0, c.used_size, size=n_symbols)
    w = wf.synthesize(c.encode_indices(idx), config.geometry,
                      config.peak_power_per_unit)
    symbol_t = c.q * config.geometry.slot_duration
    os.makedirs(args.output_dir, exist_ok=True)
    rows = ["window_symbols,metric"]
    for k in windows:
        metric = sk.flicker_metric(w, float(k) * symbol_t)
        rows.append(f"{k},{sk.format_float(metric)}")
        print(f"window_symbols={k} flicker={metric:.6g}")
    with open(os.path.join(args.output_dir, "flicker.csv"), "w",
              encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
    return 0


_COMMANDS = {
    "construct": cmd_construct,
    "stats": cmd_stats,
    "ber-sweep": cmd_ber_sweep,
    "dimming-sweep": cmd_dimming_sweep,
    "isi-sweep": cmd_isi_sweep,
    "nonlin-compare": cmd_nonlin_compare,
    "rate": cmd_rate,
    "flicker": cmd_flicker,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vlclink",
        description="Link-level simulation toolkit for LED visible-light "
                    "communication",
    )
    parser.add_argument(
        "--version", action="version",
        version=f"vlclink {__version__} (config schema v{CONFIG_SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in _COMMANDS:
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--output-dir", default="out")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except ConfigError as exc:
        return _fail_config(exc)
    except ParameterError as exc:
        print(f"error: parameter: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
