"""Detecting vertices of previously unseen classes.

Compares two rejection detectors on an imbalanced evolving graph where two
new classes appear mid-sequence: the plain sigmoid-threshold baseline
(binary cross-entropy, threshold 0.5) against the class-weighted variant
(weighted binary cross-entropy, threshold 0.75).  The weighting keeps rare
classes trainable, which lifts both the open-set F1 and the detection MCC.

Run:  python demos/03_unseen_class_detection.py   (a few minutes)
"""

import numpy as np

import evograph as eg

graph = eg.generate(
    eg.SynthConfig(
        num_timestamps=14,
        vertices_per_timestamp=80,
        num_initial_classes=10,
        new_class_schedule={7: 2},
        class_skew=0.8,
        feature_dim=16,
        feature_noise=0.4,
        intra_class_edge_prob=0.15,
        inter_class_edge_prob=0.015,
        window_back=3,
        seed=20,
    )
)
counts = np.bincount(graph.labels, minlength=graph.num_classes)
print(f"class sizes (imbalanced): {counts.tolist()}")
print(f"classes 10 and 11 first appear at timestamp 7\n")

detectors = {
    "DOC  (bce, tau=0.50)": eg.DetectorConfig(variant="doc", tau_min=0.5),
    "gDOC (weighted, tau=0.75)": eg.DetectorConfig(variant="gdoc", tau_min=0.75),
}
for name, det in detectors.items():
    mccs, f1s = [], []
    for s in range(5):
        cfg = eg.ExperimentConfig(
            model="sage", epochs=200, history_size=3, restart="warm",
            learning_rate=0.02, weight_decay=5e-3, seeds=(s,), detector=det,
        )
        rep = eg.run_sequence(graph, cfg, seed=s)
        mccs.append(rep.mcc())
        f1s.append(rep.open_macro_f1())
    print(f"{name}: MCC {np.mean(mccs):.3f}  Open Macro-F1 {np.mean(f1s):.3f}")

print("\nthe unweighted loss collapses on rare classes, so its rejections")
print("are indiscriminate; class weighting keeps known classes confident")
print("and leaves the genuinely new vertices below the threshold.")
