import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ipdlab.batch import BatchConfig, run_batch  # noqa: E402
from ipdlab.trials import ParameterRanges, load_directory  # noqa: E402

# Desk-scale batch shared by the structural, qualitative and forest checks.
DESK_RANGES = ParameterRanges(N=(3, 20), k=(5, 10))
DESK_SEEDS = (0, 299)


@dataclass
class DeskBatch:
    out: Path
    records: list
    seconds: float
    fresh: bool


@pytest.fixture(scope="session")
def desk_batch(tmp_path_factory):
    """300 trials; set IPDLAB_DESK_BATCH to a directory to reuse (and resume) an earlier batch."""
    reuse = os.environ.get("IPDLAB_DESK_BATCH")
    out = Path(reuse) if reuse else tmp_path_factory.mktemp("desk")
    start = time.perf_counter()
    summary = run_batch(BatchConfig(ranges=DESK_RANGES, seeds=DESK_SEEDS), out=out)
    seconds = time.perf_counter() - start
    return DeskBatch(out, load_directory(out), seconds, fresh=not summary.skipped)


@pytest.fixture(scope="session")
def desk_frame(desk_batch):
    from ipdlab.analysis.features import feature_table, impute

    return impute(feature_table(desk_batch.records))
