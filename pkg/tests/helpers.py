"""Shared builders for CLI and acceptance tests."""

import json

from twophoton import io
from twophoton.stack import BioSignal, StimSchedule
from twophoton.synth import SynthConfig, generate, heart_rate_signal


def make_pipeline_inputs(root, frames=16, size=40):
    """Resting/stimulated synthetic stacks, heart-rate CSVs, schedule and config."""
    sched = StimSchedule([0.25, 1.0])
    common = dict(rows=size, cols=size, frames=frames, n_cells=8, cell_radius_px=3.0, noise_sd=1.0,
                  drift_amplitude_px=1.5, drift_period_frames=8, theta_amplitude_rad=0.01,
                  active_cells=(0, 3), transient_gain=40.0, global_gain_wobble=0.05)
    rest, _ = generate(SynthConfig(seed=1, **common))
    stim, _ = generate(SynthConfig(seed=2, stim=sched, **common))
    io.save_stack(rest, root / "rest.json")
    io.save_stack(stim, root / "stim.json")
    io.save_biosignal(BioSignal(1000.0, heart_rate_signal(3000, 2.0, seed=1)), root / "hr_rest.csv")
    io.save_biosignal(BioSignal(1000.0, heart_rate_signal(4000, 6.0, seed=2)), root / "hr_stim.csv")
    io.save_schedule(sched, root / "schedule.csv")
    cfg = {
        "resting_stack": "rest.json",
        "stimulated_stack": "stim.json",
        "resting_biosignal": "hr_rest.csv",
        "stimulated_biosignal": "hr_stim.csv",
        "schedule": "schedule.csv",
        "alignment": {"max_shift_px": 4},
        "center": "mean",
    }
    (root / "pipeline.json").write_text(json.dumps(cfg))
    return root / "pipeline.json"
