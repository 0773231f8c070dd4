"""
Inverse-filter gain and a cubic-kernel LS-SVM
=============================================

An order-10 LPC model fit to inhalations whitens breath frames, so their
prediction gain drops. A classifier over windows of log gain turns the
gain track into breath events.
"""

import numpy as np

from scbabreath import lpc, pipeline, synth
from scbabreath.config import ToolConfig
from scbabreath.events import breathing_rates, compare

cfg = ToolConfig()
exemplars = synth.exemplar_set()
model = lpc.fit_lpc(exemplars, cfg.lpc.order, cfg.frontend)
print("lpc coefficients", np.round(model.coeffs, 3))

# gain is low inside inhalations and near one elsewhere
scene = synth.render_scene(synth.breathing_scene(seed=1))
gains = pipeline.lpc_gains(scene.buffer, model, cfg)
inside = np.zeros(len(gains.values), bool)
for a, b in scene.truth.inhales:
    inside |= (gains.times >= a) & (gains.times < b)
print("median gain inside %.3f outside %.3f" % (np.median(gains.values[inside]),
                                                 np.median(gains.values[~inside])))

# threshold detector first
c = compare(pipeline.detect_lpc(scene.buffer, model, cfg).events, scene.truth.inhales)
print("lpc alone: recall %.2f precision %.2f" % (c.recall, c.precision))

# train on a different scene, then run on this one
train = synth.render_scene(synth.breathing_scene(seed=7))
rep = pipeline.train_gain_classifier([(train.buffer, train.truth.inhales)], model, cfg)
print("gamma", rep.model.gamma, "verification accuracy %.3f" % rep.verification.accuracy)

det = pipeline.detect_lpc_svm(scene.buffer, model, rep.model, cfg)
c = compare(det.events, scene.truth.inhales)
print("lpc-svm: recall %.2f precision %.2f max start error %.3f s"
      % (c.recall, c.precision, np.abs(c.start_errors()).max()))

rates = breathing_rates(det.events)
print("median rate %.1f bpm" % np.median(rates.rate_bpm))
