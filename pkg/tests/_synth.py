"""Synthetic gaze traces with a known cluster structure.

Clusters sit several tile units apart so no fixation window can span two
of them at the dispersion thresholds the tests sweep.  Tight clusters
stay far below the smallest threshold; drifting clusters only cohere at
the larger ones, so both threshold sweeps bite.
"""

import numpy as np

from tilesense.gaze import make_trace

CLUSTER_GAP = 3.5
TIGHT_JITTER = 0.01
DRIFT_LENGTH = 0.6
DRIFT_SAMPLES = 13


def make_cluster_trace(rng, allow_invalid=True):
    ts = []
    pts = []
    ok = []
    t = 0.0
    n_clusters = int(rng.integers(3, 7))
    for ci in range(n_clusters):
        cx = CLUSTER_GAP * ci + float(rng.uniform(0.0, 0.4))
        cy = CLUSTER_GAP * ci + float(rng.uniform(0.0, 0.4))
        if rng.random() < 0.6:
            n = int(rng.integers(4, 10))
            dt = float(rng.uniform(60.0, 500.0)) / (n - 1)
            for _ in range(n):
                ts.append(t)
                pts.append((
                    cx + float(rng.uniform(-TIGHT_JITTER, TIGHT_JITTER)),
                    cy + float(rng.uniform(-TIGHT_JITTER, TIGHT_JITTER)),
                ))
                ok.append(not (allow_invalid and rng.random() < 0.1))
                t += dt
        else:
            dt = float(rng.uniform(9.0, 11.0))
            step = DRIFT_LENGTH / (DRIFT_SAMPLES - 1)
            along_x = rng.random() < 0.5
            for k in range(DRIFT_SAMPLES):
                jit = float(rng.uniform(-0.005, 0.005))
                if along_x:
                    pts.append((cx + step * k, cy + jit))
                else:
                    pts.append((cx + jit, cy + step * k))
                ts.append(t)
                ok.append(not (allow_invalid and rng.random() < 0.1))
                t += dt
        t += float(rng.uniform(20.0, 60.0))
    return make_trace(ts, pts, ok)
