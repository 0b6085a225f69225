import numpy as np
import pytest

from presenteval.ingest import FeatureTable
from presenteval.schemas import MODALITY_COLUMNS
from presenteval.synth import SynthSpec, generate


def make_table(modality: str, values: np.ndarray, fps: float = 2.0,
               confidence: np.ndarray | None = None) -> FeatureTable:
    """In-memory feature table with frame-indexed timestamps."""
    n = values.shape[0]
    return FeatureTable(
        modality=modality,
        columns=MODALITY_COLUMNS[modality],
        timestamps=np.arange(n, dtype=np.float64) / fps,
        values=np.asarray(values, dtype=np.float64),
        confidence=confidence,
    )


SMALL_SPEC = SynthSpec(
    n_videos=20, n_persons=20, duration_range_s=(36.0, 52.0), fps=2.0,
    rater_noise_sd=0.2, seed=104,
)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """A small but complete synthetic dataset shared across tests."""
    root = tmp_path_factory.mktemp("smallset")
    generate(SMALL_SPEC, root)
    return root
