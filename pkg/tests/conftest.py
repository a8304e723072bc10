"""Shared fixtures: the frozen synthetic evaluation corpus.

The corpus is 20 aligned triplets built from procedural paintings at
half resolution (299x188, sources at 3.6x), master seed 42, default
generator settings. Detector masks and both fills are computed once per
session; several acceptance criteria and CLI tests share them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

import craquelure as cq
from craquelure.synthesis import derive_seed

CORPUS_SEED = 42
CORPUS_SIZE = 20
CORPUS_TARGET = (299, 188)
CORPUS_SCALE = 3.6


@dataclass
class CorpusEntry:
    stem: str
    seed: int
    clean: np.ndarray
    mask: np.ndarray
    damaged: np.ndarray
    detected: np.ndarray
    restored_ad: np.ndarray
    restored_mtm: np.ndarray


def build_corpus_entry(index: int) -> CorpusEntry:
    seed = derive_seed(CORPUS_SEED, index)
    painting = cq.procedural_painting(seed % (2**32), target_size=CORPUS_TARGET,
                                      scale=CORPUS_SCALE)
    spec = cq.CrackSpec(target_size=CORPUS_TARGET, seed=seed)
    triplet = cq.generate_triplet(painting, spec)
    detected = cq.detect(triplet.damaged)
    return CorpusEntry(
        stem=f"img{index:03d}",
        seed=seed,
        clean=triplet.clean,
        mask=triplet.mask,
        damaged=triplet.damaged,
        detected=detected,
        restored_ad=cq.fill(triplet.damaged, detected, "ad"),
        restored_mtm=cq.fill(triplet.damaged, detected, "mtm"),
    )


@pytest.fixture(scope="session")
def corpus() -> list[CorpusEntry]:
    return [build_corpus_entry(i) for i in range(CORPUS_SIZE)]
