"""Monte Carlo engine and metrics.

Runs the end-to-end chain (encode, interleave, synthesize, LED, channel,
detect, slot statistics, deinterleave, decode) in fixed-size batches whose
RNG streams derive from (master_seed, batch_index), scheduled in fixed
waves so results are bit-identical for any worker count.  Also houses the
link budget arithmetic, the analytic SER oracles used to validate the
simulator, the flicker metric, and rate accounting.
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc
from scipy.stats import norm

from . import analog_chain as ac
from . import constellations as con
from . import ofdm as ofdm_mod
from . import receiver as rx
from . import waveform as wf
from .errors import ConfigError, ParameterError

WAVE_BATCHES = 8  # batches per scheduling wave, independent of worker count


# ---------------------------------------------------------------------------
# link budget
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinkBudget:
    """Received-power arithmetic from illumination-level inputs."""

    illuminance: float = 400.0          # lux
    aperture_area: float = 1e-5         # m^2 (0.1 cm^2)
    luminous_efficacy: float = 300.0    # lm/W
    background_power: float = 5e-6      # W

    def __post_init__(self):
        if min(self.illuminance, self.aperture_area,
               self.luminous_efficacy) <= 0:
            raise ParameterError("link budget inputs must be positive")
        if self.background_power < 0:
            raise ParameterError("background_power must be nonnegative")

    @property
    def received_signal_power(self):
        return self.illuminance * self.aperture_area / self.luminous_efficacy


def illuminance_to_power(illuminance, aperture_area, luminous_efficacy):
    """Received optical signal power implied by an illumination level."""
    return LinkBudget(
        illuminance, aperture_area, luminous_efficacy
    ).received_signal_power


# practical operating point: standard illumination through a
# sub-0.1 cm^2 aperture puts a few microwatts on the detector
PRACTICAL_RECEIVED_POWER = 5e-6


# ---------------------------------------------------------------------------
# analytic oracles
# ---------------------------------------------------------------------------

def q_function(x):
    return 0.5 * erfc(np.asarray(x, dtype=np.float64) / np.sqrt(2.0))


def ser_exact_equicorrelated(m_symbols, k, lam, slot_snr):
    """Exact SER of correlation decoding for an equidistant constant-weight
    cyclic code over AWGN slot statistics.

    All symbol pairs overlap in lam slots, so the noise projections are
    equicorrelated and the common term cancels: the decision reduces to
    m-1 iid comparisons against the true score raised by sqrt(snr*(k-lam)).
    """
    shift = np.sqrt(slot_snr * (k - lam))

    def integrand(t):
        return norm.pdf(t) * norm.cdf(t + shift) ** (m_symbols - 1)

    p_correct, _ = quad(integrand, -12, 12, limit=200)
    return 1.0 - p_correct


def ser_exact_for(c, slot_snr):
    """Exact correlation-decoding SER for PPM or difference-set EPPM."""
    if c.scheme == con.PPM:
        return ser_exact_equicorrelated(c.size, 1, 0, slot_snr)
    if c.scheme == con.EPPM:
        lam = con.difference_set_lambda(c.q, c.seed_positions)
        if lam is None:
            raise ParameterError("EPPM seed is not a difference set")
        return ser_exact_equicorrelated(c.size, c.k, lam, slot_snr)
    raise ParameterError(f"no closed-form SER for scheme {c.scheme!r}")


def ser_union_bound(c, slot_snr):
    """Pairwise union bound on SER over AWGN slot statistics."""
    symbols = c.symbols.astype(np.float64)
    total = 0.0
    for i in range(c.size):
        d = np.abs(symbols - symbols[i]).sum(axis=1)
        d[i] = np.inf
        total += q_function(np.sqrt(d[np.isfinite(d)] * slot_snr) / 2.0).sum()
    return min(1.0, total / c.size)


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SchemeSpec:
    kind: str                       # ppm | mppm | eppm | meppm | dco_ofdm
    q: int = 7
    k: int = 3
    n: int = 1
    use_complements: bool = False
    # DCO-OFDM
    n_subcarriers: int = 64
    qam_order: int = 16
    dc_bias_sigma: float = 3.0
    cyclic_prefix: int = 0
    sample_rate: float = 1e8        # OFDM only; pulse schemes use geometry

    def build_constellation(self):
        if self.kind == con.PPM:
            return con.build_ppm(self.q)
        if self.kind == con.MPPM:
            return con.build_mppm(self.q, self.k)
        if self.kind == con.EPPM:
            return con.build_eppm(self.q, self.k)
        if self.kind == con.MEPPM:
            return con.build_meppm(self.q, self.k, self.n,
                                   self.use_complements)
        raise ParameterError(f"not a pulse scheme: {self.kind!r}")

    def build_ofdm(self):
        return ofdm_mod.OfdmConfig(
            n_subcarriers=self.n_subcarriers,
            qam_order=self.qam_order,
            dc_bias_sigma=self.dc_bias_sigma,
            cyclic_prefix=self.cyclic_prefix,
        )


@dataclass(frozen=True)
class ChannelSpec:
    mode: str = "awgn"              # identity | awgn | physical
    slot_snr_db: float = 10.0       # awgn: SNR of a unit slot statistic
    sample_noise_sigma: float = 0.0  # awgn: explicit sample-level sigma
    model: ac.ChannelModel = field(default_factory=lambda: ac.IDENTITY_CHANNEL)
    detector: ac.DetectorModel = field(default_factory=ac.DetectorModel)

    def dispersive(self):
        return self.model.nlos_gain > 0 or self.model.los_delay > 0


@dataclass(frozen=True)
class RunSpec:
    max_bits: int = 10_000_000
    min_errors: int = 100
    batch_symbols: int = 2048
    workers: int = 1


@dataclass(frozen=True)
class TrialConfig:
    scheme: SchemeSpec
    geometry: wf.SlotGeometry
    device: ac.LedModel = field(default_factory=lambda: ac.LED_PRESETS["ideal"])
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    run: RunSpec = field(default_factory=RunSpec)
    peak_power_per_unit: float = 1.0
    array_split_leds: int = 0       # >0: drive that many LEDs separately
    interleaver_depth: int = 1
    dimming_target: float = 0.0     # 0: off
    decoder: str = ""               # default: per scheme
    seed: int = 1

    def params_record(self):
        doc = asdict(self)
        doc["device"] = {
            k: (str(v) if v in (np.inf,) else v)
            for k, v in asdict(self.device).items()
        }
        # worker count is an execution detail, not an experiment parameter
        doc["run"].pop("workers", None)
        return doc


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class TrialReport:
    scheme: str
    params: dict
    bits_sent: int
    bit_errors: int
    ber: float
    ci95: float
    ci_valid: bool
    symbols_sent: int
    symbol_errors: int
    elapsed: float
    rng_seed: int

    @staticmethod
    def from_counts(config, bits_sent, bit_errors, symbols_sent,
                    symbol_errors, elapsed):
        ber = bit_errors / bits_sent if bits_sent else 0.0
        ci95 = (
            1.96 * np.sqrt(ber * (1.0 - ber) / bits_sent) if bits_sent else 0.0
        )
        return TrialReport(
            scheme=config.scheme.kind,
            params=config.params_record(),
            bits_sent=bits_sent,
            bit_errors=bit_errors,
            ber=ber,
            ci95=ci95,
            ci_valid=bit_errors >= 10,
            symbols_sent=symbols_sent,
            symbol_errors=symbol_errors,
            elapsed=elapsed,
            rng_seed=config.seed,
        )

    @property
    def ser(self):
        return self.symbol_errors / self.symbols_sent if self.symbols_sent else 0.0

    def equivalent_to(self, other):
        """Equality on everything except wall-clock time."""
        a = {k: v for k, v in vars(self).items() if k != "elapsed"}
        b = {k: v for k, v in vars(other).items() if k != "elapsed"}
        return a == b


# ---------------------------------------------------------------------------
# the end-to-end chain
# ---------------------------------------------------------------------------

class _PulseChain:
    """Precomputed objects shared by every batch of one trial."""

    def __init__(self, config):
        self.config = config
        c = config.scheme.build_constellation()
        self.peak = config.peak_power_per_unit
        if config.dimming_target:
            dim = wf.apply_dimming(c, config.dimming_target)
            c = dim.constellation
            self.peak *= dim.power_scale
            self.achieved_dimming = dim.achieved_ratio
        else:
            self.achieved_dimming = None
        self.constellation = c
        self.geometry = config.geometry
        self.interleaver = (
            wf.InterleaverSpec(depth=config.interleaver_depth, q=c.q)
            if config.interleaver_depth > 1
            else None
        )
        decoder = config.decoder or (
            "components" if c.scheme == con.MEPPM else "correlation"
        )
        self.gain = self._linear_gain()
        kernel = (
            self._effective_kernel()
            if config.geometry.overlap_factor > 1
            else None
        )
        self.receiver = rx.StreamReceiver(
            c, config.geometry, decoder=decoder,
            interleaver=self.interleaver, gain=self.gain, kernel=kernel,
        )

    def _linear_gain(self):
        cfg = self.config
        gain = self.peak * cfg.device.linear_gain * cfg.channel.model.total_gain
        if cfg.channel.mode == "physical":
            gain *= cfg.channel.detector.responsivity
        if cfg.array_split_leds and np.isfinite(cfg.device.saturation_power):
            # per-LED binary drive: the on-level compression is exactly known
            gain = (
                ac.memoryless_response(self.peak, cfg.device)
                * cfg.channel.model.total_gain
            )
            if cfg.channel.mode == "physical":
                gain *= cfg.channel.detector.responsivity
        return gain

    def _effective_kernel(self):
        """Measured slot response of one unit pulse through the noiseless
        chain (LED curve and pole, channel, responsivity); the receiver
        restores and cancels with this, honoring its perfect-channel-
        knowledge contract."""
        cfg = self.config
        g = cfg.geometry
        q = self.constellation.q
        decay_slots = 0
        if cfg.channel.mode != "identity" and (
            cfg.channel.dispersive() or cfg.channel.model.shadowed
        ):
            decay_slots = int(np.ceil(
                5.0 * cfg.channel.model.nlos_decay / g.slot_duration
            ))
        guard_slots = 6 * g.overlap_factor + decay_slots
        n_sym = max(4, int(np.ceil(guard_slots / q)) + 2)
        words = np.zeros((n_sym, q), dtype=np.int16)
        words[0, 0] = 1
        w = wf.synthesize(words, g, self.peak)
        w = ac.led_transfer(w, cfg.device)
        w = _apply_channel_deterministic(w, cfg)
        stats = rx.slot_statistics(w, g).values
        peak = np.abs(stats).max()
        if peak <= 0:
            raise ParameterError("unit pulse produced no received signal")
        keep = np.flatnonzero(np.abs(stats) > 1e-9 * peak)
        return stats[: keep[-1] + 1]

    def batch_symbols(self):
        n = self.config.run.batch_symbols
        depth = self.config.interleaver_depth
        return n + (-n) % max(depth, 1)

    def run_batch(self, batch_index):
        cfg = self.config
        c = self.constellation
        g = self.geometry
        rng = np.random.default_rng([cfg.seed, batch_index])
        n_sym = self.batch_symbols()
        bits = rng.integers(0, 2, size=n_sym * c.bits_per_symbol)
        idx = con.bits_to_indices(bits, c.bits_per_symbol)
        words = c.encode_indices(idx)
        if self.interleaver is not None:
            words = wf.interleave(words, self.interleaver)

        if cfg.array_split_leds:
            parts = wf.array_split(words, cfg.array_split_leds)
            samples = sum(
                ac.led_transfer(
                    wf.synthesize(p, g, self.peak), cfg.device
                ).samples
                for p in parts
            )
            w = wf.Waveform(samples, g.sample_rate, g)
        else:
            w = ac.led_transfer(wf.synthesize(words, g, self.peak), cfg.device)

        y = _apply_channel(w, cfg, rng)
        decoded = self.receiver.decode_waveform(y)
        rx_bits = con.indices_to_bits(decoded, c.bits_per_symbol)
        bit_errors = int(np.sum(rx_bits != bits))
        symbol_errors = int(np.sum(decoded != idx))
        return bits.size, bit_errors, n_sym, symbol_errors


class _OfdmChain:
    def __init__(self, config):
        self.config = config
        self.ofdm = config.scheme.build_ofdm()
        fs = config.scheme.sample_rate
        self.fs = fs
        # composite linear response for the one-tap equalizer: drive scale,
        # LED small-signal gain, LED pole, channel taps, responsivity
        ir = ac.lowpass_impulse_response(config.device, fs, 256)
        if config.channel.dispersive() or config.channel.model.shadowed:
            cir = ac.channel_impulse_response(
                config.channel.model, fs,
                max(256, _cir_length(config.channel.model, fs)),
            )
            ir = np.convolve(ir, cir)
        else:
            ir = ir * config.channel.model.total_gain
        gain = config.peak_power_per_unit * config.device.linear_gain
        if config.channel.mode == "physical":
            gain *= config.channel.detector.responsivity
        self.equalizer_ir = ir * gain

    def run_batch(self, batch_index):
        cfg = self.config
        rng = np.random.default_rng([cfg.seed, batch_index])
        n_frames = cfg.run.batch_symbols
        bits = rng.integers(0, 2, size=n_frames * self.ofdm.bits_per_frame)
        w = ofdm_mod.dco_modulate(bits, self.ofdm, self.fs)
        w = wf.Waveform(w.samples * cfg.peak_power_per_unit, self.fs)
        w = ac.led_transfer(w, cfg.device)
        y = _apply_channel(w, cfg, rng)
        rx_bits = ofdm_mod.dco_demodulate(y, self.ofdm, self.equalizer_ir)
        bit_errors = int(np.sum(rx_bits != bits))
        frames = rx_bits.reshape(n_frames, -1) != bits.reshape(n_frames, -1)
        frame_errors = int(np.sum(frames.any(axis=1)))
        return bits.size, bit_errors, n_frames, frame_errors


def _cir_length(model, fs):
    return int(round(model.los_delay * fs)) + int(
        np.ceil(5.0 * model.nlos_decay * fs)
    ) + 1


def _apply_channel_deterministic(w, cfg):
    """Noise-free part of the channel (propagation, gains, responsivity)."""
    spec = cfg.channel
    if spec.mode == "identity":
        return w
    if spec.mode == "physical":
        quiet = replace(spec.detector, background_power=0.0,
                        thermal_noise_density=0.0)
        return ac.propagate_and_detect(w, spec.model, quiet, 0)
    if spec.mode != "awgn":
        raise ParameterError(f"unknown channel mode {spec.mode!r}")
    samples = w.samples
    if spec.dispersive() or spec.model.shadowed:
        h = ac.channel_impulse_response(
            spec.model, w.sample_rate, _cir_length(spec.model, w.sample_rate)
        )
        samples = np.convolve(samples, h)[: samples.size]
    else:
        samples = samples * spec.model.total_gain
    return wf.Waveform(samples, w.sample_rate, w.geometry)


def _apply_channel(w, cfg, rng):
    spec = cfg.channel
    if spec.mode == "identity":
        return w
    if spec.mode == "physical":
        seed = rng.integers(0, 2 ** 63 - 1)
        return ac.propagate_and_detect(w, spec.model, spec.detector, seed)
    y = _apply_channel_deterministic(w, cfg)
    sigma = spec.sample_noise_sigma
    if sigma == 0.0 and cfg.geometry is not None:
        # slot-level SNR: variance of a unit-amplitude slot statistic
        snr = 10 ** (spec.slot_snr_db / 10)
        sigma = cfg.peak_power_per_unit * np.sqrt(
            cfg.geometry.samples_per_slot / snr
        )
    samples = y.samples
    if sigma > 0:
        samples = samples + rng.standard_normal(samples.size) * sigma
    return wf.Waveform(samples, w.sample_rate, w.geometry)


def _build_chain(config):
    if config.scheme.kind == "dco_ofdm":
        return _OfdmChain(config)
    return _PulseChain(config)


def run_trials(config):
    """Run the chain until the stop rule (max_bits or min_errors) is met.

    Batches are scheduled in fixed waves of WAVE_BATCHES; each batch's RNG
    derives from (seed, batch_index), so the totals do not depend on the
    worker count.
    """
    start = time.perf_counter()
    chain = _build_chain(config)
    totals = np.zeros(4, dtype=np.int64)
    next_batch = 0
    run = config.run
    with ThreadPoolExecutor(max_workers=max(1, run.workers)) as pool:
        while True:
            indices = range(next_batch, next_batch + WAVE_BATCHES)
            next_batch += WAVE_BATCHES
            for result in pool.map(chain.run_batch, indices):
                totals += np.asarray(result, dtype=np.int64)
            if totals[1] >= run.min_errors or totals[0] >= run.max_bits:
                break
    report = TrialReport.from_counts(
        config, int(totals[0]), int(totals[1]), int(totals[2]),
        int(totals[3]), time.perf_counter() - start,
    )
    if isinstance(chain, _PulseChain) and chain.achieved_dimming is not None:
        report.params["achieved_dimming"] = chain.achieved_dimming
    return report


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

SWEEP_AXES = ("snr", "dimming", "delay_spread", "saturation")


def _config_at(config, axis, value):
    if axis == "snr":
        return replace(config, channel=replace(config.channel, slot_snr_db=value))
    if axis == "dimming":
        return replace(config, dimming_target=value)
    if axis == "delay_spread":
        # value in slot durations
        model = replace(
            config.channel.model,
            nlos_decay=value * config.geometry.slot_duration,
        )
        return replace(config, channel=replace(config.channel, model=model))
    if axis == "saturation":
        device = replace(config.device, saturation_power=value)
        return replace(config, device=device)
    raise ParameterError(f"unknown sweep axis {axis!r}")


def sweep(config, axis, points, output_dir=None, label=None):
    """One run_trials per axis point under a shared master seed.

    Returns the reports; when output_dir is given, writes
    `<label>_<axis>.csv` plus a JSON manifest (elapsed excluded so reruns
    are byte-identical).
    """
    if axis not in SWEEP_AXES:
        raise ParameterError(f"axis must be one of {SWEEP_AXES}")
    points = list(points)
    if len(points) < 2:
        raise ParameterError("a sweep needs at least 2 points")
    reports = [run_trials(_config_at(config, axis, p)) for p in points]
    if output_dir is not None:
        write_sweep_outputs(config, axis, points, reports, output_dir, label)
    return reports


def format_float(x):
    return f"{x:.12g}"


def sweep_rows(points, reports):
    rows = ["axis_value,bits,errors,ber,ci95,flag,seed"]
    for p, r in zip(points, reports):
        rows.append(",".join([
            format_float(p),
            str(r.bits_sent),
            str(r.bit_errors),
            format_float(r.ber),
            format_float(r.ci95),
            "ok" if r.ci_valid else "low_errors",
            str(r.rng_seed),
        ]))
    return "\n".join(rows) + "\n"


def write_sweep_outputs(config, axis, points, reports, output_dir, label=None):
    import os

    label = label or config.scheme.kind
    os.makedirs(output_dir, exist_ok=True)
    csv_path = os.path.join(output_dir, f"{label}_{axis}.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(sweep_rows(points, reports))
    manifest = {
        "axis": axis,
        "points": points,
        "config": config.params_record(),
        "results": [
            {k: v for k, v in vars(r).items() if k not in ("elapsed", "params")}
            for r in reports
        ],
    }
    manifest_path = os.path.join(output_dir, f"{label}_{axis}_manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return csv_path, manifest_path


# ---------------------------------------------------------------------------
# nonlinearity comparison (DCO-OFDM vs MEPPM with array split)
# ---------------------------------------------------------------------------

def _pilot_mean_power(config):
    """Mean optical power of one noiseless pilot batch after the LED."""
    pilot = replace(
        config,
        channel=ChannelSpec(mode="identity"),
        run=replace(config.run, batch_symbols=min(config.run.batch_symbols, 256)),
    )
    chain = _build_chain(pilot)
    if isinstance(chain, _OfdmChain):
        cfg = chain.config
        rng = np.random.default_rng([cfg.seed, 0])
        bits = rng.integers(0, 2, size=64 * chain.ofdm.bits_per_frame)
        w = ofdm_mod.dco_modulate(bits, chain.ofdm, chain.fs)
        w = wf.Waveform(w.samples * cfg.peak_power_per_unit, chain.fs)
        return float(ac.led_transfer(w, cfg.device).samples.mean())
    cfg = chain.config
    c = chain.constellation
    rng = np.random.default_rng([cfg.seed, 0])
    idx = rng.integers(0, c.used_size, size=256)
    words = c.encode_indices(idx)
    if cfg.array_split_leds:
        parts = wf.array_split(words, cfg.array_split_leds)
        samples = sum(
            ac.led_transfer(
                wf.synthesize(p, cfg.geometry, chain.peak), cfg.device
            ).samples
            for p in parts
        )
        return float(np.mean(samples))
    w = wf.synthesize(words, cfg.geometry, chain.peak)
    return float(ac.led_transfer(w, cfg.device).samples.mean())


def calibrate_drive(config, target_mean_power, iterations=3):
    """Scale the drive so the post-LED mean optical power hits the target.

    Fixed-point iteration; deterministic (pilot uses the config seed).
    """
    cfg = config
    for _ in range(iterations):
        measured = _pilot_mean_power(cfg)
        if measured <= 0:
            raise ParameterError("pilot produced no optical power")
        scale = target_mean_power / measured
        cfg = replace(cfg, peak_power_per_unit=cfg.peak_power_per_unit * scale)
    return cfg


def nonlin_compare(meppm_config, ofdm_config, saturation_points,
                   mean_power=1.0, output_dir=None):
    """Saturation sweep of DCO-OFDM against MEPPM driven as split LEDs.

    Both chains are recalibrated to the same post-LED mean optical power at
    every saturation point; saturation values are absolute (same units as
    the drive).  Returns {"meppm": [...], "dco_ofdm": [...]} reports.
    """
    points = list(saturation_points)
    if len(points) < 2:
        raise ParameterError("saturation sweep needs at least 2 points")
    results = {"meppm": [], "dco_ofdm": []}
    for sat in points:
        for name, base in (("meppm", meppm_config), ("dco_ofdm", ofdm_config)):
            cfg = replace(base, device=replace(base.device,
                                               saturation_power=sat))
            cfg = calibrate_drive(cfg, mean_power)
            results[name].append(run_trials(cfg))
    if output_dir is not None:
        for name, base in (("meppm", meppm_config), ("dco_ofdm", ofdm_config)):
            write_sweep_outputs(base, "saturation", points, results[name],
                                output_dir, label=name)
    return results


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def flicker_metric(w, window_seconds):
    """Worst relative deviation of tiled window means from the global mean.

    Windows tile the waveform back to back (a trailing partial window is
    dropped); a scheme with constant per-symbol energy scores exactly 0 at
    any whole multiple of the symbol duration.
    """
    samples = np.asarray(w.samples, dtype=np.float64)
    n_win = int(round(window_seconds * w.sample_rate))
    if n_win < 1 or n_win > samples.size:
        raise ParameterError("window must fit inside the waveform")
    n_tiles = samples.size // n_win
    tiles = samples[: n_tiles * n_win].reshape(n_tiles, n_win)
    global_mean = samples.mean()
    if global_mean == 0:
        return 0.0
    return float(np.abs(tiles.mean(axis=1) - global_mean).max() / global_mean)


@dataclass(frozen=True)
class RateAccounting:
    bits_per_slot: float
    slot_rate: float
    per_color_rate: float
    n_colors: int
    aggregate_rate: float


def rate_accounting(c, g, led, n_colors, bits_per_symbol=None):
    """Throughput bookkeeping: overlapped slots run F times faster than the
    device bandwidth, so rate = (bits/slot) * F * bandwidth per color.

    `bits_per_symbol` caps the constellation's native value when a system
    deliberately uses fewer bits (e.g. a round spectral-efficiency target).
    """
    native = c.bits_per_symbol
    bps = native if bits_per_symbol is None else bits_per_symbol
    if bps > native:
        raise ParameterError(
            f"bits_per_symbol {bps} exceeds the constellation's {native}"
        )
    bits_per_slot = bps / c.q
    slot_rate = g.overlap_factor * led.bandwidth_3db
    per_color = bits_per_slot * slot_rate
    return RateAccounting(
        bits_per_slot=bits_per_slot,
        slot_rate=slot_rate,
        per_color_rate=per_color,
        n_colors=n_colors,
        aggregate_rate=n_colors * per_color,
    )


# ---------------------------------------------------------------------------
# config documents (the JSON experiment format)
# ---------------------------------------------------------------------------

def _expect(doc, key, path, kind=None, default=None, required=False):
    if key not in doc:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required entry")
        return default
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(
            f"{path}.{key}", f"expected {getattr(kind, '__name__', kind)}"
        )
    return value


def config_from_document(doc):
    """Validate a JSON experiment document into a TrialConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("$", "document must be a JSON object")
    scheme_doc = _expect(doc, "scheme", "$", dict, required=True)
    kind = _expect(scheme_doc, "kind", "scheme", str, required=True)
    if kind not in (*con.SCHEMES, "dco_ofdm"):
        raise ConfigError("scheme.kind", f"unknown scheme {kind!r}")
    scheme = SchemeSpec(
        kind=kind,
        q=_expect(scheme_doc, "q", "scheme", int, 7),
        k=_expect(scheme_doc, "k", "scheme", int, 3),
        n=_expect(scheme_doc, "n", "scheme", int, 1),
        use_complements=_expect(scheme_doc, "use_complements", "scheme",
                                bool, False),
        n_subcarriers=_expect(scheme_doc, "n_subcarriers", "scheme", int, 64),
        qam_order=_expect(scheme_doc, "qam_order", "scheme", int, 16),
        dc_bias_sigma=_expect(scheme_doc, "dc_bias_sigma", "scheme",
                              (int, float), 3.0),
        cyclic_prefix=_expect(scheme_doc, "cyclic_prefix", "scheme", int, 0),
        sample_rate=_expect(scheme_doc, "sample_rate", "scheme",
                            (int, float), 1e8),
    )
    geo_doc = _expect(doc, "geometry", "$", dict, required=True)
    try:
        geometry = wf.SlotGeometry(
            slot_duration=_expect(geo_doc, "slot_duration", "geometry",
                                  (int, float), required=True),
            samples_per_slot=_expect(geo_doc, "samples_per_slot", "geometry",
                                     int, required=True),
            overlap_factor=_expect(geo_doc, "overlap_factor", "geometry",
                                   int, 1),
        )
    except ParameterError as exc:
        raise ConfigError("geometry", str(exc)) from exc
    device_doc = _expect(doc, "device", "$", (dict, str), default={})
    try:
        device = ac.led_from_dict(device_doc)
    except (KeyError, TypeError, ParameterError) as exc:
        raise ConfigError("device", str(exc)) from exc
    channel_doc = _expect(doc, "channel", "$", dict, default={})
    mode = _expect(channel_doc, "mode", "channel", str, "awgn")
    if mode not in ("identity", "awgn", "physical"):
        raise ConfigError("channel.mode", f"unknown mode {mode!r}")
    try:
        model = ac.channel_from_dict(channel_doc.get("model", {}))
        detector = ac.detector_from_dict(channel_doc.get("detector", {}))
    except (TypeError, ParameterError) as exc:
        raise ConfigError("channel", str(exc)) from exc
    channel = ChannelSpec(
        mode=mode,
        slot_snr_db=_expect(channel_doc, "slot_snr_db", "channel",
                            (int, float), 10.0),
        sample_noise_sigma=_expect(channel_doc, "sample_noise_sigma",
                                   "channel", (int, float), 0.0),
        model=model,
        detector=detector,
    )
    run_doc = _expect(doc, "run", "$", dict, default={})
    run = RunSpec(
        max_bits=_expect(run_doc, "max_bits", "run", int, 10_000_000),
        min_errors=_expect(run_doc, "min_errors", "run", int, 100),
        batch_symbols=_expect(run_doc, "batch_symbols", "run", int, 2048),
        workers=_expect(run_doc, "workers", "run", int, 1),
    )
    return TrialConfig(
        scheme=scheme,
        geometry=geometry,
        device=device,
        channel=channel,
        run=run,
        peak_power_per_unit=_expect(doc, "peak_power_per_unit", "$",
                                    (int, float), 1.0),
        array_split_leds=_expect(doc, "array_split_leds", "$", int, 0),
        interleaver_depth=_expect(doc, "interleaver_depth", "$", int, 1),
        dimming_target=_expect(doc, "dimming_target", "$", (int, float), 0.0),
        decoder=_expect(doc, "decoder", "$", str, ""),
        seed=_expect(doc, "seed", "$", int, 1),
    )


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"invalid JSON: {exc}") from exc
    return config_from_document(doc), doc
