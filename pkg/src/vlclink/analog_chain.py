"""Transmit device and indoor channel models.

LED: memoryless soft saturation followed by a first-order low-pass (the
rise-time limit).  Channel: sharp LOS tap plus an exponential NLOS tail;
shadowing removes the LOS tap.  Detection: responsivity plus white Gaussian
noise whose variance tracks instantaneous shot noise from signal and
background light, plus a thermal floor.
"""

import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import elementary_charge as Q_ELECTRON
from scipy.signal import lfilter

from .errors import ParameterError
from .waveform import Waveform


@dataclass(frozen=True)
class LedModel:
    """First-order low-pass pole plus a soft-saturation drive curve.

    Set bandwidth_3db or saturation_power to numpy.inf to bypass the
    corresponding stage.
    """

    bandwidth_3db: float
    saturation_power: float = np.inf
    knee_sharpness: float = 1.0
    linear_gain: float = 1.0

    def __post_init__(self):
        if self.bandwidth_3db <= 0:
            raise ParameterError("bandwidth_3db must be positive")
        if self.saturation_power <= 0:
            raise ParameterError("saturation_power must be positive")
        if self.knee_sharpness < 1:
            raise ParameterError("knee_sharpness must be >= 1")


# 3-dB bandwidths: phosphor-converted LEDs reach a few MHz, trichromatic
# devices a few tens of MHz
LED_PRESETS = {
    "phosphor": LedModel(bandwidth_3db=3e6),
    "trichromatic": LedModel(bandwidth_3db=30e6),
    "ideal": LedModel(bandwidth_3db=np.inf),
}


@dataclass(frozen=True)
class ChannelModel:
    """LOS gain/delay plus an exponential-tail NLOS component."""

    los_gain: float = 1.0
    los_delay: float = 0.0
    nlos_gain: float = 0.0
    nlos_decay: float = 10e-9
    shadowed: bool = False

    def __post_init__(self):
        if self.los_gain < 0 or self.nlos_gain < 0:
            raise ParameterError("path gains must be nonnegative")
        if self.nlos_decay <= 0:
            raise ParameterError("nlos_decay must be positive")

    @property
    def total_gain(self):
        return (0.0 if self.shadowed else self.los_gain) + self.nlos_gain


IDENTITY_CHANNEL = ChannelModel(los_gain=1.0, nlos_gain=0.0)


@dataclass(frozen=True)
class DetectorModel:
    """Photodiode responsivity, collection area, and noise parameters."""

    responsivity: float = 0.5
    aperture_area: float = 1e-5
    background_power: float = 5e-6
    thermal_noise_density: float = 1e-24  # A^2/Hz

    def __post_init__(self):
        if self.responsivity <= 0:
            raise ParameterError("responsivity must be positive")
        if self.aperture_area <= 0:
            raise ParameterError("aperture_area must be positive")
        if self.background_power < 0 or self.thermal_noise_density < 0:
            raise ParameterError("noise parameters must be nonnegative")


NOISELESS_DETECTOR = DetectorModel(
    responsivity=1.0, background_power=0.0, thermal_noise_density=0.0
)


# ---------------------------------------------------------------------------
# LED
# ---------------------------------------------------------------------------

def memoryless_response(drive, m):
    """Soft-saturation drive-to-power curve; strictly increasing, bounded."""
    x = m.linear_gain * np.asarray(drive, dtype=np.float64)
    if not np.isfinite(m.saturation_power):
        return x
    s2 = 2.0 * m.knee_sharpness
    return x / (1.0 + (x / m.saturation_power) ** s2) ** (1.0 / s2)


def lowpass_coefficient(m, sample_rate):
    if not np.isfinite(m.bandwidth_3db):
        return 0.0
    return float(np.exp(-2.0 * np.pi * m.bandwidth_3db / sample_rate))


def lowpass_impulse_response(m, sample_rate, length):
    """Discrete impulse response of the LED's first-order pole."""
    a = lowpass_coefficient(m, sample_rate)
    if a == 0.0:
        h = np.zeros(length)
        h[0] = 1.0
        return h
    return (1.0 - a) * a ** np.arange(length)


def led_transfer(w, m):
    """Drive waveform through the LED: saturation curve, then the pole."""
    y = memoryless_response(w.samples, m)
    a = lowpass_coefficient(m, w.sample_rate)
    if a > 0.0:
        y = lfilter([1.0 - a], [1.0, -a], y)
    return Waveform(y, w.sample_rate, w.geometry)


# ---------------------------------------------------------------------------
# channel
# ---------------------------------------------------------------------------

def channel_impulse_response(cm, sample_rate, length):
    """Discretized LOS + NLOS response, normalized to sum to the total gain."""
    delay_idx = int(round(cm.los_delay * sample_rate))
    needed = delay_idx + int(np.ceil(5.0 * cm.nlos_decay * sample_rate)) + 1
    if length < needed:
        raise ParameterError(
            f"length {length} does not cover los_delay + 5 x nlos_decay "
            f"({needed} samples)"
        )
    h = np.zeros(length)
    if not cm.shadowed and cm.los_gain > 0:
        h[delay_idx] += cm.los_gain
    if cm.nlos_gain > 0:
        t = np.arange(length - delay_idx) / sample_rate
        tail = np.exp(-t / cm.nlos_decay)
        h[delay_idx:] += cm.nlos_gain * tail / tail.sum()
    return h


def export_impulse_csv(h, path):
    np.savetxt(path, h, fmt="%.12g")


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------

def propagate_and_detect(w, cm, dm, rng_seed, ir_length=None):
    """Optical waveform -> electrical samples with signal-dependent noise.

    y = responsivity * (h conv w) + n, where n is white Gaussian with
    per-sample variance
        [2 q R (P_inst + P_background) + thermal_density] * (sample_rate / 2).
    Deterministic for a fixed rng_seed.
    """
    fs = w.sample_rate
    if ir_length is None:
        delay_idx = int(round(cm.los_delay * fs))
        ir_length = delay_idx + int(np.ceil(5.0 * cm.nlos_decay * fs)) + 1
    if cm.nlos_gain == 0 and cm.los_delay == 0 and not cm.shadowed:
        received = cm.los_gain * w.samples
    else:
        h = channel_impulse_response(cm, fs, ir_length)
        received = np.convolve(w.samples, h)[: w.samples.size]
    current = dm.responsivity * received
    # zero background and thermal densities select the noiseless mode; the
    # signal-shot term only matters in regimes where background is modeled
    if dm.background_power > 0 or dm.thermal_noise_density > 0:
        power_inst = np.maximum(received, 0.0)
        variance = (
            2.0 * Q_ELECTRON * dm.responsivity
            * (power_inst + dm.background_power)
            + dm.thermal_noise_density
        ) * (fs / 2.0)
        rng = np.random.default_rng(rng_seed)
        current = current + rng.standard_normal(current.size) * np.sqrt(variance)
    return Waveform(current, fs, w.geometry)


def noise_variance_dark(dm, sample_rate):
    """Closed-form per-sample noise variance with no incident signal."""
    return (
        2.0 * Q_ELECTRON * dm.responsivity * dm.background_power
        + dm.thermal_noise_density
    ) * (sample_rate / 2.0)


# ---------------------------------------------------------------------------
# presets from JSON
# ---------------------------------------------------------------------------

def led_from_dict(doc):
    if isinstance(doc, str):
        return LED_PRESETS[doc]
    doc = dict(doc)
    preset = doc.pop("preset", None)
    base = LED_PRESETS[preset] if preset else LedModel(bandwidth_3db=np.inf)
    for key in ("bandwidth_3db", "saturation_power"):
        if doc.get(key) in ("inf", None) and key in doc:
            doc[key] = np.inf
    return replace(base, **doc)


def channel_from_dict(doc):
    return ChannelModel(**doc)


def detector_from_dict(doc):
    return DetectorModel(**doc)


def load_presets_json(path):
    """Load {"led": ..., "channel": ..., "detector": ...} blocks from a file."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    out = {}
    if "led" in doc:
        out["led"] = led_from_dict(doc["led"])
    if "channel" in doc:
        out["channel"] = channel_from_dict(doc["channel"])
    if "detector" in doc:
        out["detector"] = detector_from_dict(doc["detector"])
    return out
