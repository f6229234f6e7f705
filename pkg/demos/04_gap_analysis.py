# Run the whole pipeline on the fixture config, then read the analysis back and
# poke at combinations and gaps.
import json
import shutil
import tempfile
from pathlib import Path

import numpy as np

from nidsgap.pipeline import PipelineConfig, run_pipeline
from nidsgap.coverage import CoverageLabel
from nidsgap.report import CoverageMatrix, combination_coverage, ranked_combinations, technique_gaps

SMOKE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "smoke"

work = Path(tempfile.mkdtemp(prefix="nidsgap-demo-"))
shutil.copytree(SMOKE, work, dirs_exist_ok=True)
cfg = PipelineConfig.load(work / "config.json")
analysis = run_pipeline(cfg)
print("report written to", cfg.out)
print(sorted(p.name for p in cfg.out.iterdir()))

m = analysis.matrix
print()
print("mean coverage per dataset")
for d, s in analysis.stats.items():
    print(f"  {d:15} {s.mean_score:.3f}  Full={s.full_count}  {s.label_histogram}")

# the numeric view is a plain array; row means show the weakest techniques
values = m.numeric()
order = np.argsort(values.mean(axis=1), kind="stable")
print()
print("least covered techniques:", [m.techniques[i] for i in order[:3]])

print()
for c in analysis.best_by_k:
    print(f"best {len(c.subset)}: {' + '.join(c.subset):30} {c.coverage_fraction:.0%}")
for c in ranked_combinations(m, 2):
    print(f"pair {' + '.join(c.subset):30} {c.coverage_fraction:.0%}")

gaps = technique_gaps(m)
print()
print("uncovered everywhere:", gaps.uncovered_everywhere)
print("hanging on a single Partial:", gaps.minimal_coverage)

# what if only Full counts as coverage
strict = combination_coverage(m, m.datasets, threshold=CoverageLabel.FULL)
print("all datasets, Full only:", f"{strict.coverage_fraction:.0%}")

# the matrix file can be edited and reported on again
saved = CoverageMatrix.from_dict(json.loads((cfg.out / "coverage_matrix.json").read_text()))
print("matrix on disk matches the analysis:", saved == m)
shutil.rmtree(work)
