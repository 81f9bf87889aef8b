#!/usr/bin/env python3
"""Single-shot scope capture of the three parallel correlators.

Transmits the first 64-sample preamble at the chosen SNR and records every
correlator's output trace; only the matching correlator should cross its
threshold.  Writes traces.csv and, when matplotlib is importable, a stacked
scope-style plot.

Usage:
    python scripts/run_scope_capture.py [--snr 10] [--seed 0] [--out-dir results]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from pktdet.harness import default_sweep_config, run_scope_scenario


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--snr", type=float, default=10.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default="results")
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    cfg = default_sweep_config(seed=7)
    result = run_scope_scenario(cfg, snr_db=args.snr, seed=args.seed)
    csv_path = out_dir / "traces.csv"
    result.write_csv(csv_path)
    print(f"wrote {csv_path}")
    print(f"transmitted: {result.transmitted_id}, preamble starts at {result.true_start_index}")
    for event in result.events:
        print(f"event: {event.standard_id} peak={event.peak_value} at {event.peak_index}")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; skipping the plot")
        return 0

    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    for ax, pid, threshold in zip(axes, result.profile_ids, result.thresholds):
        ax.plot(result.traces[pid], lw=0.9)
        ax.axhline(threshold, color="tab:red", ls="--", lw=0.8, label=f"threshold {threshold}")
        marker = " (transmitted)" if pid == result.transmitted_id else ""
        ax.set_ylabel(f"{pid}{marker}")
        ax.legend(loc="upper right", fontsize=8)
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("sample index")
    axes[0].set_title(f"Correlator outputs at {args.snr:g} dB SNR")
    fig.tight_layout()
    plot_path = out_dir / "scope_capture.png"
    fig.savefig(plot_path, dpi=150)
    print(f"wrote {plot_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
