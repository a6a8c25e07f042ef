"""Shared fixture builders for the test suite."""

from __future__ import annotations

import json

import numpy as np

from textdiv import DistanceMatrix, EvalInstance, text_key


def euclid_matrix(cand_points: np.ndarray, ref_points: np.ndarray) -> DistanceMatrix:
    """Joint Euclidean distance matrix for two point clouds."""
    cand_points = np.atleast_2d(np.asarray(cand_points, dtype=np.float64))
    ref_points = np.atleast_2d(np.asarray(ref_points, dtype=np.float64))
    joint = np.vstack([cand_points, ref_points])
    diffs = joint[:, None, :] - joint[None, :, :]
    values = np.sqrt((diffs**2).sum(axis=-1))
    np.fill_diagonal(values, 0.0)
    return DistanceMatrix(
        n=cand_points.shape[0], m=ref_points.shape[0], values=values
    )


def write_corpus(path, records) -> str:
    """Write corpus records ({id, candidates, references}) as JSONL."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return str(path)


def write_embeddings(path, texts, dim=16, seed=7, encoder="test-hash-encoder") -> str:
    """Write unit-norm random embeddings for the given texts as NDJSON."""
    rng = np.random.default_rng(seed)
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "format_version": 1,
            "dim": dim,
            "encoder_name": encoder,
            "pooling": "mean",
        }
        fh.write(json.dumps(header) + "\n")
        seen = set()
        for text in texts:
            key = text_key(text)
            if key in seen:
                continue
            seen.add(key)
            vec = rng.normal(size=dim)
            vec /= np.linalg.norm(vec)
            fh.write(json.dumps({"key": key, "vector": vec.tolist()}) + "\n")
    return str(path)


def caption_pool() -> list[str]:
    """Distinct plausible captions sharing one scene's vocabulary."""
    return [
        "a man walks a brown dog along the beach",
        "a person strolls on the sand with a dog",
        "a dog and its owner walk near the ocean",
        "someone walking a dog by the shore",
        "a brown dog walks beside a man on wet sand",
        "a man and a dog stroll along the water",
        "the owner walks his dog down the beach",
        "a dog on a leash walks with a person by the sea",
        "a man takes his brown dog for a beach walk",
        "a person and a dog wander along the coastline",
    ]


def distractor_pool() -> list[str]:
    """Captions from an unrelated scene, disjoint style."""
    return [
        "two chefs prepare pasta in a busy kitchen",
        "a red sports car speeds around the race track",
        "children play chess under a large oak tree",
        "a violinist performs on a dim concert stage",
        "fresh bread cools on the bakery counter",
        "hikers climb a steep snowy mountain ridge",
        "a fisherman repairs his net at dawn",
        "students paint murals on the school wall",
        "a barista pours latte art in a quiet cafe",
        "lightning flashes over the city skyline at night",
    ]


def make_unique_correct_instance(
    instance_id: str,
    unique: int,
    total: int = 10,
    correct: int | None = None,
) -> EvalInstance:
    """Candidate set with a controlled uniqueness/correctness mix.

    Takes ``unique`` distinct texts (correct ones first, then distractors up
    to ``total - correct`` if requested) and repeats the first text to pad
    the set to ``total`` candidates.  References are the full caption pool.
    """
    pool = caption_pool()
    wrong = distractor_pool()
    if correct is None:
        correct = unique
    base = [f"{t} today" for t in pool[:correct]]
    base += wrong[: unique - correct]
    base = base[:unique]
    candidates = base + [base[0]] * (total - len(base))
    return EvalInstance.from_texts(instance_id, candidates, pool)
