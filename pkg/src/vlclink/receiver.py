"""Threshold-free demodulation for the pulse-position family.

The front end integrates the electrical waveform against the known F-slot
rectangular pulse, end-aligned so that a statistic at slot j sees only
pulses launched at or before j.  Within one symbol block the (past-
cancelled) statistics are then a unit-diagonal triangular convolution of
the slot amplitudes, so each block restores its amplitudes with a fixed
Q x Q solve before the decision; decided pulse tails are subtracted from
later statistics (decision feedback rather than stream-wide deconvolution,
which would accumulate noise).

Correlation decoding scores mean-removed symbol vectors, so decisions need
no threshold and survive any DC offset; an exhaustive minimum-distance
decoder doubles as the oracle for small constellations.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import constellations as con
from . import waveform as wf
from .errors import CapacityError, InputError, ParameterError

ML_SIZE_LIMIT = 1 << 20


@dataclass
class SlotStatistics:
    """Per-slot matched-filter outputs for a slot-structured waveform."""

    values: np.ndarray
    geometry: wf.SlotGeometry

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise InputError("slot statistics must be finite")

    @property
    def n_slots(self):
        return self.values.size

    def signal_slots(self):
        """Statistics excluding the F-1 trailing pad slots."""
        pad = self.geometry.overlap_factor - 1
        return self.values[: self.values.size - pad] if pad else self.values

    def per_symbol(self, q):
        sig = self.signal_slots()
        if sig.size % q:
            raise InputError("statistics length is not a multiple of Q")
        return sig.reshape(-1, q)


def pulse_kernel(f):
    """Slot-domain response of one unit pulse seen by the end-aligned
    correlator: a triangle rising over F slots and falling over F-1."""
    d = np.arange(2 * f - 1)
    return np.minimum(np.minimum(d + 1, 2 * f - 1 - d), f).astype(np.float64)


def slot_statistics(y, g):
    """Correlate a waveform with the known F-slot pulse at each slot offset.

    For F=1 this integrates each slot; for F>1 each statistic is the sum of
    the F most recent slot integrals (rectangular template, end-aligned).
    """
    samples = np.asarray(y.samples, dtype=np.float64)
    sps = g.samples_per_slot
    if samples.size % sps:
        raise InputError("waveform length is not slot-aligned")
    u = samples.reshape(-1, sps).sum(axis=1) / sps
    f = g.overlap_factor
    if f > 1:
        cs = np.concatenate([[0.0], np.cumsum(u)])
        idx = np.arange(u.size)
        u = cs[idx + 1] - cs[np.maximum(0, idx - f + 1)]
    return SlotStatistics(u, g)


def expected_statistics(codewords, g, peak_power_per_unit=1.0):
    """Noiseless slot statistics of a synthesized stream (unit responsivity)."""
    amps = wf.slot_amplitudes(codewords).astype(np.float64)
    kernel = pulse_kernel(g.overlap_factor)
    full = np.convolve(amps, kernel) * peak_power_per_unit
    return full[: amps.size + g.overlap_factor - 1]


def restoration_matrix(q, f):
    """Lower-triangular map from a block's slot amplitudes to its own-block
    statistics (unit diagonal, hence exactly invertible)."""
    kernel = pulse_kernel(f)
    mat = np.zeros((q, q))
    for j in range(q):
        for i in range(j + 1):
            d = j - i
            if d < kernel.size:
                mat[j, i] = kernel[d]
    return mat


def restore_block_amplitudes(block_stats, q, f):
    """Invert the in-block pulse superposition (identity for F=1)."""
    if f == 1:
        return np.asarray(block_stats, dtype=np.float64)
    mat = restoration_matrix(q, f)
    return solve_triangular(mat, np.asarray(block_stats, float), lower=True)


def _as_vector(s, q):
    vec = s.values if isinstance(s, SlotStatistics) else np.asarray(s, float)
    vec = vec.reshape(-1)
    if vec.size != q:
        raise InputError(f"expected {q} slot statistics, got {vec.size}")
    return vec


def _candidate_codewords(c, count=None):
    count = c.size if count is None else count
    if c.is_materialized:
        return c.symbols[:count].astype(np.float64)
    if count > ML_SIZE_LIMIT:
        raise CapacityError("constellation too large for template decoding")
    return np.stack(
        [c.codeword_at(i) for i in range(count)]
    ).astype(np.float64)


class CorrelationDecoder:
    """Argmax of the inner product with mean-removed symbol vectors.

    Operates in the slot-amplitude domain over the full symbol set; ties
    resolve to the lowest symbol index.
    """

    def __init__(self, c):
        self.constellation = c
        self.codewords = _candidate_codewords(c)
        self.scoring = self.codewords - self.codewords.mean(axis=1, keepdims=True)

    def decode_block(self, stats_2d):
        scores = np.asarray(stats_2d, dtype=np.float64) @ self.scoring.T
        return np.argmax(scores, axis=1)

    def decode(self, stats_vec):
        return int(self.decode_block(stats_vec.reshape(1, -1))[0])


class MlDecoder:
    """Exhaustive minimum-Euclidean-distance decision over expected slot
    amplitudes; the desk-scale oracle for the faster decoders.

    `gain` scales unit codewords to the calibrated statistic level;
    `noise_var` (per-slot) whitens the metric when provided.
    """

    def __init__(self, c, gain=1.0, noise_var=None):
        if c.size > ML_SIZE_LIMIT:
            raise CapacityError(
                f"{c.size} symbols exceed the ML decoder limit {ML_SIZE_LIMIT}"
            )
        self.constellation = c
        self.templates = _candidate_codewords(c) * gain
        if noise_var is not None:
            weights = 1.0 / np.sqrt(np.asarray(noise_var, dtype=np.float64))
            self.templates = self.templates * weights
            self._weights = weights
        else:
            self._weights = None

    def decode_block(self, stats_2d):
        s = np.asarray(stats_2d, dtype=np.float64)
        if self._weights is not None:
            s = s * self._weights
        cross = s @ self.templates.T
        energy = (self.templates ** 2).sum(axis=1)
        return np.argmax(cross - 0.5 * energy, axis=1)

    def decode(self, stats_vec):
        return int(self.decode_block(stats_vec.reshape(1, -1))[0])


class MeppmComponentDecoder:
    """Successive-cancellation decoding of multilevel EPPM.

    N times: pick the component (shift or complement) with the largest
    energy-corrected residual correlation and subtract its expected
    contribution; the recovered multiset maps to its canonical symbol.
    Because complement mixtures can defeat the greedy peeling, a second
    candidate is formed by rounding the component-count solve to the
    nearest valid symbol, and whichever candidate reconstructs the observed
    statistics more closely wins.  Statistics are assumed calibrated to
    unit pulse gain (`gain` rescales them when they are not).
    """

    def __init__(self, c, gain=1.0):
        if c.scheme != con.MEPPM:
            raise ParameterError("component decoding is MEPPM-only")
        self.constellation = c
        self.gain = gain
        self.templates = c.components().astype(np.float64)
        self._half_energy = 0.5 * (self.templates ** 2).sum(axis=1)
        self._base = c.components_base().astype(np.float64)
        # linear solve for the nearest-valid-symbol candidate, available
        # whenever the shift matrix is invertible for this (seed, N)
        if con._MeppmLattice.usable(self._base[0], c.n, c.use_complements):
            if c.use_complements:
                mat = self._base - 0.5
            else:
                mat = self._base
            self._solve = np.linalg.inv(mat)
        else:
            self._solve = None

    def decode_counts(self, stats_2d):
        """Greedy component counts for each row of (raw) statistics."""
        r = np.array(stats_2d, dtype=np.float64, copy=True) / self.gain
        if r.ndim == 1:
            r = r.reshape(1, -1)
        return self._greedy(r)

    def _greedy(self, calibrated):
        r = calibrated.copy()
        n = r.shape[0]
        counts = np.zeros((n, self.templates.shape[0]), dtype=np.int64)
        rows = np.arange(n)
        for _ in range(self.constellation.n):
            pick = np.argmax(r @ self.templates.T - self._half_energy, axis=1)
            counts[rows, pick] += 1
            r -= self.templates[pick]
        return counts

    def _counts_to_c(self, counts):
        q = self.constellation.q
        a = counts[:, :q]
        if counts.shape[1] > q:
            return a - counts[:, q:]
        return a

    def _reconstruct(self, c_rows):
        c_rows = np.asarray(c_rows, dtype=np.float64)
        if self.constellation.use_complements:
            bias = (self.constellation.n - c_rows.sum(axis=1)) / 2.0
            return c_rows @ self._base + bias[:, None]
        return c_rows @ self._base

    def _round_candidates(self, stats_2d):
        """Nearest valid component-count vectors by rounding the solve."""
        cst = self.constellation
        if cst.use_complements:
            target = stats_2d - cst.n / 2.0
        else:
            target = stats_2d
        c_float = target @ self._solve
        c_int = np.rint(c_float).astype(np.int64)
        for row in range(c_int.shape[0]):
            _repair_lattice_vector(
                c_int[row], c_float[row], cst.n, cst.use_complements
            )
        return c_int

    def decode_block(self, stats_2d):
        stats_2d = np.asarray(stats_2d, dtype=np.float64) / self.gain
        if stats_2d.ndim == 1:
            stats_2d = stats_2d.reshape(1, -1)
        counts = self._greedy(stats_2d)
        c_greedy = self._counts_to_c(counts)
        best_c = c_greedy
        if self._solve is not None:
            c_round = self._round_candidates(stats_2d)
            d_greedy = ((stats_2d - self._reconstruct(c_greedy)) ** 2).sum(axis=1)
            d_round = ((stats_2d - self._reconstruct(c_round)) ** 2).sum(axis=1)
            best_c = np.where((d_round < d_greedy)[:, None], c_round, c_greedy)
        sums = np.rint(self._reconstruct(best_c)).astype(np.int64)
        out = np.empty(best_c.shape[0], dtype=np.int64)
        for i, s in enumerate(sums):
            out[i] = self.constellation.index_of(s)
        return out

    def decode(self, stats_vec):
        return int(self.decode_block(stats_vec.reshape(1, -1))[0])


def _repair_lattice_vector(c_int, c_float, n, use_complements):
    """Clamp a rounded component-count vector into the valid set, in place.

    With complements: sum|c| <= N with the parity of N; without: c >= 0 with
    sum exactly N.  Each repair step moves the entry whose rounding cost is
    smallest.
    """
    if not use_complements:
        np.maximum(c_int, 0, out=c_int)
        while c_int.sum() != n:
            err = c_float - c_int
            if c_int.sum() < n:
                c_int[int(np.argmax(err))] += 1
            else:
                masked = np.where(c_int > 0, err, np.inf)
                c_int[int(np.argmin(masked))] -= 1
        return
    while True:
        norm = int(np.abs(c_int).sum())
        if norm <= n and (n - norm) % 2 == 0:
            return
        best = None  # (cost, j, direction)
        for j in range(c_int.size):
            for direction in (-1, 1):
                new_val = c_int[j] + direction
                new_norm = norm - abs(int(c_int[j])) + abs(new_val)
                if norm > n:
                    admissible = new_norm < norm
                else:
                    admissible = new_norm <= n
                if not admissible:
                    continue
                cost = abs(new_val - c_float[j]) - abs(c_int[j] - c_float[j])
                if best is None or cost < best[0]:
                    best = (cost, j, direction)
        c_int[best[1]] += best[2]


def decode_correlation(s, c, overlap_factor=1):
    """One-symbol correlation decision (see CorrelationDecoder)."""
    vec = restore_block_amplitudes(_as_vector(s, c.q), c.q, overlap_factor)
    return CorrelationDecoder(c).decode(vec)


def decode_ml(s, c, noise_var=None, overlap_factor=1, gain=1.0):
    """One-symbol exhaustive minimum-distance decision."""
    vec = restore_block_amplitudes(_as_vector(s, c.q), c.q, overlap_factor)
    return MlDecoder(c, gain=gain, noise_var=noise_var).decode(vec)


def decode_meppm_components(s, c, overlap_factor=1):
    """One-symbol successive-cancellation MEPPM decision."""
    vec = restore_block_amplitudes(_as_vector(s, c.q), c.q, overlap_factor)
    return MeppmComponentDecoder(c).decode(vec)


def deinterleave(s, spec):
    """Invert the transmit interleaver at the slot-statistic level."""
    if isinstance(s, SlotStatistics):
        if s.geometry.overlap_factor != 1:
            raise ParameterError("interleaving is defined for F=1 streams")
        return SlotStatistics(
            wf.deinterleave_values(s.values, spec), s.geometry
        )
    return wf.deinterleave_values(np.asarray(s, dtype=np.float64), spec)


class StreamReceiver:
    """Waveform-to-indices pipeline for one scheme and geometry.

    F=1 streams decode fully vectorized (after optional deinterleaving).
    Overlapped streams decode causally: restore each block's amplitudes,
    decide, then cancel the decided pulses' tails from later statistics.
    """

    def __init__(self, c, g, decoder="correlation", interleaver=None,
                 gain=1.0, noise_var=None, kernel=None):
        self.constellation = c
        self.geometry = g
        self.interleaver = interleaver
        self.gain = gain
        if interleaver is not None and g.overlap_factor != 1:
            raise ParameterError("interleaving requires overlap_factor 1")
        # with overlap, block restoration divides the kernel level out, so
        # the decision stage sees unit-scaled amplitudes
        dec_gain = gain if g.overlap_factor == 1 else 1.0
        if decoder == "correlation":
            self._decoder = CorrelationDecoder(c)
        elif decoder == "ml":
            self._decoder = MlDecoder(c, gain=dec_gain, noise_var=noise_var)
        elif decoder == "components":
            self._decoder = MeppmComponentDecoder(c, gain=dec_gain)
        else:
            raise ParameterError(f"unknown decoder {decoder!r}")
        if kernel is not None:
            # measured slot response of one unit pulse through the known
            # chain; restoration and cancellation then match the hardware
            self._kernel = np.asarray(kernel, dtype=np.float64)
            if self._kernel[0] <= 0:
                raise ParameterError("kernel must respond in its first slot")
        else:
            self._kernel = pulse_kernel(g.overlap_factor) * gain
        if g.overlap_factor > 1:
            mat = np.zeros((c.q, c.q))
            for j in range(c.q):
                for i in range(j + 1):
                    if j - i < self._kernel.size:
                        mat[j, i] = self._kernel[j - i]
            self._restore = np.linalg.inv(mat)
        else:
            self._restore = None

    def decode_stats(self, stats):
        q = self.constellation.q
        f = self.geometry.overlap_factor
        values = stats.values if isinstance(stats, SlotStatistics) else stats
        values = np.asarray(values, dtype=np.float64)
        n_signal = values.size - (f - 1)
        if n_signal % q:
            raise InputError("statistics do not cover whole symbols")
        n_sym = n_signal // q
        if f == 1:
            sig = values
            if self.interleaver is not None:
                sig = wf.deinterleave_values(sig, self.interleaver)
            return self._decoder.decode_block(sig.reshape(n_sym, q))
        res = values.copy()
        out = np.empty(n_sym, dtype=np.int64)
        soft_limit = 0.5 * q
        amp_ceiling = float(self.constellation.n)  # peak slot amplitude
        for m in range(n_sym):
            lo = m * q
            amps = self._restore @ res[lo: lo + q]
            idx = self._decoder.decode(amps)
            out[m] = idx
            decided = np.asarray(
                self.constellation.codeword_at(int(idx)), dtype=np.float64
            )
            # feedback: the decided symbol normally (kills noise carryover);
            # when the decision badly mismatches the restored amplitudes,
            # cancel the soft estimate instead so one bad decision cannot
            # avalanche through the following blocks
            if np.abs(amps - decided).sum() > soft_limit:
                decided = np.clip(amps, 0.0, amp_ceiling)
            full = np.convolve(decided, self._kernel)
            hi = min(lo + full.size, res.size)
            res[lo:hi] -= full[: hi - lo]
        return out

    def decode_waveform(self, y):
        return self.decode_stats(slot_statistics(y, self.geometry))
