"""
Template matching on a synthetic SCBA recording
===============================================

Build a cepstral template from isolated inhalations, slide it along a
longer scene and pick breaths out of the normalized breath index.
"""

import numpy as np

from scbabreath import pipeline, synth, template
from scbabreath.config import ToolConfig
from scbabreath.events import compare
from scbabreath.pattern import detect_events_pattern

cfg = ToolConfig()

# sixteen exemplars, every other one with the low air alarm ticking over it
exemplars = synth.exemplar_set()
tmpl = template.build_template(exemplars, cfg.frontend, cfg.mel, cfg.pattern.target_subframes)
print("template shape", tmpl.mean.shape)

# the leading singular vector of the mean cepstrogram carries most of its energy
s = np.linalg.svd(tmpl.mean, compute_uv=False)
print("energy in first singular value: %.2f" % (s[0] ** 2 / np.sum(s ** 2)))

# a two minute scene: 40 inhales at 20 bpm with speech in the gaps
scene = synth.render_scene(synth.breathing_scene(seed=1))
det = pipeline.detect_pattern(scene.buffer, tmpl, cfg)
index = det.index
print("index frames", len(index.values), "max", index.values.max())

# score the detections against the scripted inhales
c = compare(det.events, scene.truth.inhales)
print("recall %.2f precision %.2f" % (c.recall, c.precision))

# raising the threshold thins the events, but runs can also split first
for thr in (0.15, 0.25, 0.35, 0.45):
    print(thr, len(detect_events_pattern(index, thr, cfg.pattern.min_frames)))
