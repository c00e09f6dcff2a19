"""Full pipeline on the CRD data: forecasts, SEIR, hospital DES, manifest.

    python scripts/run_crd.py [--config configs/pipeline.toml] [--ga] [--out DIR]
"""

import argparse
from pathlib import Path

from adriana import pipeline as pl

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "pipeline.toml")
    ap.add_argument("--ga", action="store_true", help="tune neurons and window with the GA first")
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = pl.PipelineConfig.from_file(args.config)
    cfg.ga.enabled = cfg.ga.enabled or args.ga
    man = pl.run_pipeline(cfg, args.out)
    out = Path(man.out_dir)
    for name in cfg.series:
        d = man.details[name]
        print(f"{name:10s} days {d['days']}  train/test {d['train_samples']}/{d['test_samples']}  "
              f"ADF p {d['adf_p_cumulative']:.3f}" + (f"  GA {d['ga_best']}" if "ga_best" in d else ""))
        print("  " + (out / name / "metrics.csv").read_text().replace("\n", "\n  ").rstrip())
    print((out / "peak_demand.txt").read_text(), end="")
    print(f"outputs in {out}")


if __name__ == "__main__":
    main()
