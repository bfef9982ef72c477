"""Shared fixture builders for the test suite."""

from __future__ import annotations

import pytest

from devminer.ingest import CommitRecord, FileChange


def make_commit(
    commit_id: str,
    author: str,
    ts: int = 0,
    message: str = "",
    changes: list[tuple[str, int, int, set[int]]] | None = None,
) -> CommitRecord:
    return CommitRecord(
        commit_id=commit_id,
        author_id=author,
        timestamp=ts,
        message=message,
        changes=tuple(
            FileChange(path, add, dele, frozenset(lines))
            for path, add, dele, lines in (changes or [])
        ),
    )


def touch(path: str, line: int = 1) -> tuple[str, int, int, set[int]]:
    return (path, 1, 1, {line})


@pytest.fixture
def figure4_commits() -> list[CommitRecord]:
    """Contribution network with two developer groups joined through S5.

    Weights: dev3-S5=1, dev6-S5=2, dev3-S4=1, dev5-S4=2, dev5-S3=2,
    dev6-S3=1, so the dev3..dev6 paths have lengths 3 (via S5) and 6
    (via S4, S3).
    """
    plan = [
        ("dev3", "S5", 1),
        ("dev6", "S5", 2),
        ("dev3", "S4", 1),
        ("dev5", "S4", 2),
        ("dev5", "S3", 2),
        ("dev6", "S3", 1),
    ]
    commits = []
    counter = 0
    for author, script, weight in plan:
        for _ in range(weight):
            commits.append(
                make_commit(f"c{counter:03d}", author, ts=counter, changes=[touch(script)])
            )
            counter += 1
    return commits


@pytest.fixture
def two_triangles_bridge() -> tuple[list[CommitRecord], dict]:
    """Developer network of two triangles joined by one bridge edge.

    Triangle 1: a,b,c (scripts t1a, t1b, t1c pairwise); triangle 2: d,e,f;
    bridge: c-d via script 'bridge.pp'.
    """
    plan = {
        "t1a.pp": ("a", "b"),
        "t1b.pp": ("b", "c"),
        "t1c.pp": ("a", "c"),
        "t2a.pp": ("d", "e"),
        "t2b.pp": ("e", "f"),
        "t2c.pp": ("d", "f"),
        "bridge.pp": ("c", "d"),
    }
    commits = []
    counter = 0
    for script, devs in plan.items():
        for dev in devs:
            commits.append(
                make_commit(f"c{counter:03d}", dev, ts=counter, changes=[touch(script)])
            )
            counter += 1
    return commits, plan
