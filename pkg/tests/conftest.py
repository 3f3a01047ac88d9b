import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from swarmselect.phylo.synth import synth_matrix


@pytest.fixture(scope="session")
def blur_matrix():
    """8 taxa, 10 genes, gene07 (index 6) carries the conflicting signal."""
    return synth_matrix(n_genes=10, blur_genes=(6,))


@pytest.fixture(scope="session")
def concordant_matrix():
    """8 taxa, 10 genes, every gene supports the same topology."""
    return synth_matrix(n_genes=10)
