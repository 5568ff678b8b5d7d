"""
Detecting impact events at high precision
=========================================

The detector is a conjunction of three gates over the feature tracks: an
energy peak must stand out against the local fluctuation level, the peak frame
must keep a noise-like broadband texture (flatness above a minimum -- a pure
tone is spectrally peaky and fails here), and onset strength must spike
nearby (a slow swell fails here).  This script runs the default detector on
ten synthetic clips with known click times and tone distractors, then measures
what matters: precision, timing error, and what happens when a threshold is
raised.
"""

import numpy as np

from touchmap.detect import DetectorConfig, detect_events
from touchmap.dsp import compute_features
from touchmap.synth import standard_corpus_spec, SynthSpec, synth_clip

# Ten 5-second clips in the standard evaluation shape: clicks at 10 dB SNR
# over pink noise, plus pure-tone distractors designed to fool an
# energy-only detector.
base = standard_corpus_spec(seed=42).to_dict()
base["n_clips"] = 10
spec = SynthSpec.from_dict(base)

cfg = DetectorConfig()  # defaults: prominence 4.0, flatness 0.3, onset ratio 3.0
print("default gates: energy prominence >=", cfg.energy_prominence_ratio,
      "| flatness >=", cfg.flatness_min, "| onset ratio >=", cfg.onset_ratio_min)

matched, false_alarms, missed = 0, 0, 0
offsets = []
cached = []  # (spectrogram, features, truth) reused for the threshold sweep
for index in range(spec.n_clips):
    clip, truth = synth_clip(spec, index)
    sgram, feats = compute_features(clip)
    events = detect_events(sgram, feats, cfg)
    cached.append((sgram, feats, truth))

    # Greedy one-to-one matching against ground truth within a 10 ms budget;
    # anything unmatched on the detection side is a false alarm, anything
    # unmatched on the truth side is a miss.
    remaining = list(truth.event_times)
    for ev in events:
        if remaining:
            nearest = min(remaining, key=lambda t: abs(t - ev.peak_time))
            if abs(nearest - ev.peak_time) <= 0.010:
                offsets.append(abs(nearest - ev.peak_time))
                remaining.remove(nearest)
                matched += 1
                continue
        false_alarms += 1
    missed += len(remaining)

precision = matched / (matched + false_alarms)
recall = matched / (matched + missed)
print(f"\nover {spec.n_clips} clips x {spec.events_per_clip} true clicks:")
print(f"  precision {precision:.3f}   recall {recall:.3f}")
print(f"  worst timing offset {max(offsets) * 1000:.2f} ms (budget 10 ms)")

# The gates are one-sided comparisons combined with AND, so raising any
# threshold can only *remove* detections -- never invent one.  That is the
# property that makes threshold tuning safe.
tight = DetectorConfig(onset_ratio_min=cfg.onset_ratio_min * 2)
before = after = 0
for sgram, feats, _ in cached:
    base_events = {round(e.peak_time, 6) for e in detect_events(sgram, feats, cfg)}
    tight_events = {round(e.peak_time, 6) for e in detect_events(sgram, feats, tight)}
    assert tight_events <= base_events, "raising a threshold must only shrink the set"
    before += len(base_events)
    after += len(tight_events)
print(f"\ndoubling the onset gate: {before} detections -> {after}, and every"
      "\nsurviving detection was already present at the looser setting")

# Each detection also fixes a segment window (50 ms before the peak, 200 ms
# total); extract_segment cuts it from the clip, zero-padded at boundaries --
# the unit that later stages embed and regress on.
from touchmap.detect import extract_segment

clip0, _ = synth_clip(spec, 0)
sgram, feats, _ = cached[0]
ev = detect_events(sgram, feats, cfg)[0]
print(f"\nfirst event of clip 0: peak at {ev.peak_time:.3f} s,"
      f" prominence {ev.energy_prominence:.1f}x spread,"
      f" flatness {ev.flatness_at_peak:.2f}, onset {ev.onset_ratio:.1f}x median")
segment = extract_segment(clip0, ev, cfg)
print(f"segment: {segment.samples.size} samples"
      f" = {segment.samples.size / segment.sample_rate * 1000:.0f} ms")
