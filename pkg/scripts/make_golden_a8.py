"""Regenerate the golden synthetic control-error export bundled for ingestion tests.

The hardware dataset is not distributed with this repository, so a
stand-in is simulated once: a Stark-shift (Z-phase) control error whose
average gate infidelity is 1.7e-3, sampled like the hardware runs
(40 sequences, 15 lengths, 1024 shots). Usage::

    python scripts/make_golden_a8.py
"""

import json
from pathlib import Path

import numpy as np

from mcmrb import cli
from mcmrb.noise import build_noise_model
from mcmrb.protocols import SuiteConfig, run_suite
from mcmrb.records import fits_to_dict, write_curves

TARGET_INFIDELITY = 1.7e-3
SEED = 24_18
SHOTS = 1024
DATA = Path(__file__).resolve().parents[1] / "src" / "mcmrb" / "data"


def main():
    phi = 0.5 * float(np.arccos(1 - 3 * TARGET_INFIDELITY))
    config = SuiteConfig(num_sequences=40, shots=SHOTS, seed=SEED)
    noise = build_noise_model("stark", {"phi": phi, "gate_eta": 1e-3, "prep_flip": 5e-3})
    data = run_suite(config, noise)
    csv_path = write_curves(data.curves, DATA / "golden_control_error.csv")
    analysis = cli.analyse_curves(data.curves, SHOTS)
    expected = {
        "source": "synthetic stark scenario",
        "phi": phi,
        "analytic_infidelity": TARGET_INFIDELITY,
        "seed": SEED,
        "shots": SHOTS,
        "num_sequences": config.num_sequences,
        "fits": fits_to_dict(analysis["fits"]),
        **analysis["result"].to_dict(),
        "signatures": analysis["classification"].to_dict()["signatures"],
    }
    (DATA / "golden_control_error.json").write_text(json.dumps(expected, indent=2) + "\n")
    print(csv_path, expected["eps_irb"], expected["signatures"])


if __name__ == "__main__":
    main()
