"""Train every model kind on each CRD series and print the raw-scale ranking.

    python scripts/compare_models.py [--config configs/crd-all-models.toml]
"""

import argparse
from pathlib import Path

from adriana import pipeline as pl

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "crd-all-models.toml")
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = pl.PipelineConfig.from_file(args.config)
    man = pl.run_pipeline(cfg, args.out)
    out = Path(man.out_dir)
    for name in cfg.series:
        rows = [ln.split(",") for ln in (out / name / "metrics.csv").read_text().splitlines()[1:]]
        score = dict(ln.split(",") for ln in (out / name / "ranking.csv").read_text().splitlines()[1:])
        print(f"\n{name}")
        print(f"  {'model':16s}{'score':>6s}{'rmse':>12s}{'mae':>12s}{'r2':>8s}")
        for m, rmse, mae, r2, scale in rows:
            if scale == "Raw":
                print(f"  {m:16s}{score[m]:>6s}{float(rmse):12.2f}{float(mae):12.2f}{float(r2):8.3f}")


if __name__ == "__main__":
    main()
